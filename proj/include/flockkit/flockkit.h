/* flockkit: Cucker-Smale type alignment dynamics with normalized weights.
 * Plain C interface over the C++ core. Every object is an opaque handle;
 * every fallible call returns an fk_status and leaves a message retrievable
 * through fk_last_error() on the calling thread. */
#ifndef FLOCKKIT_FLOCKKIT_H
#define FLOCKKIT_FLOCKKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(FLOCKKIT_BUILDING_LIBRARY)
#define FK_API __attribute__((visibility("default")))
#else
#define FK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fk_status {
  FK_OK = 0,
  FK_ERR_INPUT = 1,
  FK_ERR_NUMERICAL = 2,
  FK_ERR_CONFIG = 3,
  FK_ERR_PRECONDITION = 4,
  FK_ERR_IO = 5,
  FK_ERR_INTERNAL = 6,
  /* The scenario ran but at least one invariant check failed. */
  FK_CHECK_FAILED = 7
} fk_status;

typedef enum fk_family {
  FK_COMPACT_BUMP = 0,
  FK_LOG_GRAD_BOUNDED = 1,
  FK_GAUSSIAN_PERIODIZED = 2
} fk_family;

typedef struct fk_potential fk_potential;
typedef struct fk_ensemble fk_ensemble;
typedef struct fk_trajectory fk_trajectory;
typedef struct fk_config fk_config;

FK_API const char* fk_version(void);
FK_API const char* fk_last_error(void);
FK_API const char* fk_status_name(fk_status s);

/* side <= 0 selects free space R^dim. parameter is R (range, decay or width). */
FK_API fk_status fk_potential_create(fk_family family, double parameter, int dim, double side,
                                     fk_potential** out);
FK_API void fk_potential_destroy(fk_potential* p);
/* r has dim entries; any lift is accepted on the torus. */
FK_API fk_status fk_potential_eval(const fk_potential* p, const double* r, double* value);
FK_API fk_status fk_potential_grad(const fk_potential* p, const double* r, double* grad);
/* sup U, inf U, sup |grad U| */
FK_API fk_status fk_potential_bounds(const fk_potential* p, double* sup_value, double* inf_value,
                                     double* sup_gradient);
FK_API fk_status fk_displacement(int dim, double side, const double* x, const double* y,
                                 double* out);

/* q and p are row-major n x dim. */
FK_API fk_status fk_ensemble_create(int n, int dim, double side, const double* q, const double* p,
                                    fk_ensemble** out);
FK_API void fk_ensemble_destroy(fk_ensemble* e);
FK_API fk_status fk_ensemble_dist_to_manifold(const fk_ensemble* e, double* out);

/* epsilon <= 0 selects the plain model, otherwise the regularized one. dt <= 0 is automatic. */
FK_API fk_status fk_integrate(const fk_ensemble* w0, const fk_potential* p, double epsilon,
                              double T, double dt, int save_every, fk_trajectory** out);
FK_API void fk_trajectory_destroy(fk_trajectory* t);
FK_API int fk_trajectory_frames(const fk_trajectory* t);
FK_API fk_status fk_trajectory_time(const fk_trajectory* t, int frame, double* time);
/* q_out and p_out receive n x dim row-major values; either may be NULL. */
FK_API fk_status fk_trajectory_state(const fk_trajectory* t, int frame, double* q_out,
                                     double* p_out);
FK_API fk_status fk_trajectory_dist(const fk_trajectory* t, int frame, double* dist);

/* Spectrum of the interaction matrix at positions q (n x dim). eigenvalues may be NULL;
 * otherwise it receives n values in descending order. */
FK_API fk_status fk_spectrum(const fk_potential* p, int n, const double* q, double epsilon,
                             double* eigenvalues, double* gap, int* irreducible);

/* min(W1, 1) between two point clouds in phase space (rows are x then v, 2*dim columns). */
FK_API fk_status fk_transport_distance(int dim, double side, int na, const double* a, int nb,
                                       const double* b, uint64_t seed, double* w_hat);

FK_API fk_status fk_config_default(fk_config** out);
FK_API fk_status fk_config_load(const char* path, fk_config** out);
FK_API fk_status fk_config_parse(const char* text, fk_config** out);
FK_API void fk_config_destroy(fk_config* c);
/* Sets one key; numeric values are given in their textual form. */
FK_API fk_status fk_config_set(fk_config* c, const char* section, const char* key,
                               const char* value);
/* Writes the complete configuration. Returns the required size including the
 * terminating zero in *needed; copies when capacity suffices. */
FK_API fk_status fk_config_serialize(const fk_config* c, char* buffer, size_t capacity,
                                     size_t* needed);

/* Runs the configured scenario. FK_CHECK_FAILED means artifacts were written but
 * some check failed; the summary.json in the output directory lists which. */
FK_API fk_status fk_run_scenario(const fk_config* c);
FK_API fk_status fk_emit_plotdata(const char* dir);

#ifdef __cplusplus
}
#endif

#endif
