/* meltblow C interface.
 *
 * All objects are opaque handles created by mb_*_create / mb_*_run and
 * released with the matching mb_*_destroy (NULL is accepted). Functions
 * return mb_status; on failure a description is available from
 * mb_last_error() on the calling thread until the next failing call.
 * Units are SI unless a function says "dimensionless".
 */
#ifndef MELTBLOW_H
#define MELTBLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MELTBLOW_BUILDING_LIBRARY)
#    define MELTBLOW_API __declspec(dllexport)
#  else
#    define MELTBLOW_API __declspec(dllimport)
#  endif
#else
#  define MELTBLOW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mb_status {
  MB_OK = 0,
  MB_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad enum, size mismatch */
  MB_ERR_DOMAIN = 2,           /* argument outside the operation's domain */
  MB_ERR_NUMERICAL = 3,        /* nonconvergence, step underflow, singular state */
  MB_ERR_VALIDATION = 4,       /* data violates an invariant */
  MB_ERR_PARSE = 5,            /* malformed input file */
  MB_ERR_IO = 6,               /* file could not be opened or written */
  MB_ERR_DOMAIN_EXIT = 7,      /* flow queried outside its data region */
  MB_ERR_INTERNAL = 8
} mb_status;

MELTBLOW_API const char* mb_last_error(void);
MELTBLOW_API const char* mb_version(void);
MELTBLOW_API const char* mb_status_name(mb_status status);

/* ---- energy spectrum ---------------------------------------------------- */

typedef struct mb_spectrum mb_spectrum;

typedef struct mb_spectrum_info {
  double zeta;
  double kappa1;
  double kappa2;          /* +inf when zeta == 0 */
  double residual1;
  double residual2;
  int iterations;
  double masses[3];       /* energy of [0,k1), [k1,k2], (k2,inf) */
  double second_moment;   /* int k^2 E, +inf when zeta == 0 */
} mb_spectrum_info;

MELTBLOW_API double mb_critical_zeta(void);
MELTBLOW_API mb_status mb_spectrum_create(double zeta, mb_spectrum** out);
MELTBLOW_API void mb_spectrum_destroy(mb_spectrum* s);
MELTBLOW_API mb_status mb_spectrum_info_get(const mb_spectrum* s, mb_spectrum_info* out);
MELTBLOW_API mb_status mb_spectrum_energy(const mb_spectrum* s, double kappa, double* out);
MELTBLOW_API mb_status mb_spectrum_cumulative(const mb_spectrum* s, double kappa, double* out);
MELTBLOW_API mb_status mb_spectrum_quantile(const mb_spectrum* s, double u, double* out);
/* tr gamma(r), dimensionless */
MELTBLOW_API mb_status mb_correlation_trace(const mb_spectrum* s, double r, double* out);
/* phi(t) with time scale t_T, dimensionless */
MELTBLOW_API mb_status mb_temporal_correlation(double t, double t_T, double* out);

/* ---- local fluctuation field (dimensionless) ---------------------------- */

typedef struct mb_params mb_params;

enum { MB_BRANCH_REAL = 0, MB_BRANCH_IMAG = 1 };

MELTBLOW_API mb_status mb_params_draw(const mb_spectrum* s, size_t modes, uint64_t seed, uint64_t stream, int branch,
                                      mb_params** out);
MELTBLOW_API void mb_params_destroy(mb_params* p);
MELTBLOW_API size_t mb_params_modes(const mb_params* p);
/* u'_loc(x, t) for a frame with dimensionless mean velocity and t_T */
MELTBLOW_API mb_status mb_local_fluctuation(const mb_params* p, const double x[3], double t,
                                            const double mean_velocity[3], double t_T, double out[3]);

/* ---- flow sources -------------------------------------------------------- */

typedef struct mb_flow mb_flow;

typedef struct mb_flow_sample {
  double mean_velocity[3];
  double k;
  double eps;
  double nu;
  double rho;
} mb_flow_sample;

typedef struct mb_jet_params {
  double inlet_speed;
  double inlet_k;
  double inlet_eps;
  double slot_half_width;
  double virtual_origin;
  double spreading_rate;
  double speed_decay;
  double k_decay;
  double eps_decay;
  double ambient_fraction;
  double nu;
  double rho;
  double y_half_extent;
  double z_min;
  double z_max;
} mb_jet_params;

enum { MB_ZETA_ZERO = 0, MB_ZETA_FULL = 1 };

MELTBLOW_API void mb_jet_params_default(mb_jet_params* out);
MELTBLOW_API mb_status mb_flow_create_synthetic(const mb_jet_params* params, mb_flow** out);
/* sidecar may be NULL: the CSV path with extension .json is used */
MELTBLOW_API mb_status mb_flow_load_csv(const char* csv_path, const char* sidecar_path, mb_flow** out);
MELTBLOW_API void mb_flow_destroy(mb_flow* f);
MELTBLOW_API mb_status mb_flow_describe(const mb_flow* f, char* buffer, size_t size);
MELTBLOW_API mb_status mb_flow_sample_at(const mb_flow* f, const double x[3], double t, mb_flow_sample* out);
/* Samples the flow on the tensor grid y x z and writes CSV + sidecar. */
MELTBLOW_API mb_status mb_flow_export(const mb_flow* f, const double* y, size_t ny, const double* z, size_t nz,
                                      const char* csv_path, const char* sidecar_path);
MELTBLOW_API mb_status mb_global_fluctuation(const mb_flow* f, const mb_params* p, int zeta_mode, const double x[3],
                                             double t, double out[3]);

/* ---- fiber trajectories -------------------------------------------------- */

typedef struct mb_sim_config {
  double v0;
  double d0;
  double rho_fiber;
  double r0[3];
  double tau0[3];
  double horizon;
  double drag_normal;      /* c_n */
  double drag_tangential;  /* c_t */
  double rtol;
  double atol;
  double dt_min;
  double dt_initial;       /* 0: automatic */
  uint64_t max_steps;
  int zeta_mode;
} mb_sim_config;

typedef struct mb_trajectory_point {
  double t;
  double r[3];
  double v[3];
  double e;
  double dt;
  double t_T;
  double lT_over_vrel;
  double u[3];
} mb_trajectory_point;

enum { MB_TERMINATION_HORIZON = 0, MB_TERMINATION_DOMAIN_EXIT = 1 };

typedef struct mb_trajectory mb_trajectory;

MELTBLOW_API void mb_sim_config_default(mb_sim_config* out);
/* params may be NULL: fluctuation-free run */
MELTBLOW_API mb_status mb_simulate(const mb_flow* f, const mb_params* p, const mb_sim_config* cfg,
                                   mb_trajectory** out);
MELTBLOW_API void mb_trajectory_destroy(mb_trajectory* tr);
/* rows including the initial state */
MELTBLOW_API size_t mb_trajectory_size(const mb_trajectory* tr);
MELTBLOW_API mb_status mb_trajectory_point_get(const mb_trajectory* tr, size_t i, mb_trajectory_point* out);
MELTBLOW_API int mb_trajectory_termination(const mb_trajectory* tr);
MELTBLOW_API size_t mb_trajectory_rejected(const mb_trajectory* tr);
/* preamble: newline separated lines, each written prefixed with "# "; may be NULL */
MELTBLOW_API mb_status mb_trajectory_write_csv(const mb_trajectory* tr, const char* path, const char* preamble);

/* ---- Monte Carlo --------------------------------------------------------- */

typedef struct mb_mc_options {
  size_t samples;
  const double* heights;
  size_t n_heights;
  uint64_t seed;
  size_t modes;
  int fluctuations;
  unsigned threads;
  size_t histogram_bins;
  size_t density_points;
} mb_mc_options;

typedef struct mb_level_summary {
  double height;     /* NaN for the terminal level t = T */
  size_t count;
  size_t missing;
  double baseline;   /* fluctuation-free value, NaN if not reached */
  double mean;
  double sd;
  double min;
  double q05;
  double q25;
  double median;
  double q75;
  double q95;
  double max;
} mb_level_summary;

typedef void (*mb_progress_fn)(size_t done, size_t total, void* user);
typedef struct mb_montecarlo mb_montecarlo;

MELTBLOW_API void mb_mc_options_default(mb_mc_options* out);
MELTBLOW_API mb_status mb_montecarlo_run(const mb_flow* f, const mb_sim_config* cfg, const mb_mc_options* opt,
                                         mb_progress_fn progress, void* user, mb_montecarlo** out);
MELTBLOW_API void mb_montecarlo_destroy(mb_montecarlo* mc);
/* levels 0..n_heights-1 are the heights, level n_heights is t = T */
MELTBLOW_API mb_status mb_montecarlo_level(const mb_montecarlo* mc, size_t level, mb_level_summary* out);
MELTBLOW_API size_t mb_montecarlo_failures(const mb_montecarlo* mc);
/* Any path may be NULL to skip that file. */
MELTBLOW_API mb_status mb_montecarlo_write(const mb_montecarlo* mc, const char* json_path, const char* density_csv,
                                           const char* samples_csv, const char* config_text, const char* preamble);

/* ---- statistics ---------------------------------------------------------- */

enum { MB_ROYSTON_SHAPIRO_WILK = 0, MB_ROYSTON_MATLAB = 1 };

typedef struct mb_normality {
  double statistic;
  double p_value;
  double equivalent_df;
} mb_normality;

MELTBLOW_API mb_status mb_shapiro_wilk(const double* x, size_t n, double* w, double* p_value);
/* values: n x d, row-major */
MELTBLOW_API mb_status mb_royston(const double* values, size_t n, size_t d, int variant, mb_normality* out);
/* a: n x p, b: n x q, row-major; value and se receive p x q entries */
MELTBLOW_API mb_status mb_covariance(const double* a, const double* b, size_t n, size_t p, size_t q, double* value,
                                     double* se, double* trace, double* trace_se);

typedef struct mb_rejection_config {
  const size_t* modes;
  size_t n_modes;
  const size_t* variates;
  size_t n_variates;
  size_t replications;
  size_t sample_size;
  double alpha;
  int component;
  double spacing;
  double time_step;
  int variant;
  uint64_t seed;
  unsigned threads;
} mb_rejection_config;

MELTBLOW_API void mb_rejection_config_default(mb_rejection_config* out);
/* frequencies: n_modes x n_variates, row-major */
MELTBLOW_API mb_status mb_rejection_experiment(const mb_rejection_config* cfg, double* frequencies);
MELTBLOW_API mb_status mb_rejection_write_csv(const mb_rejection_config* cfg, const double* frequencies,
                                              const char* path, const char* preamble);

typedef struct mb_covariance_result {
  double a[4];  /* x, y, z, t */
  double b[4];
  double expected_trace;
  double trace;
  double trace_se;
  double z_score;
} mb_covariance_result;

/* count random pairs (pair seed pair_seed), samples parameter sets at zeta = 0 */
MELTBLOW_API mb_status mb_covariance_check(size_t count, uint64_t pair_seed, size_t modes, size_t samples,
                                           uint64_t seed, unsigned threads, mb_covariance_result* out);

#ifdef __cplusplus
}
#endif

#endif /* MELTBLOW_H */
