/* Exercises the C interface from C: handle lifetimes, status codes, values. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "meltblow/meltblow.h"

static int failures = 0;

#define EXPECT(cond)                                                     \
  do {                                                                   \
    if (!(cond)) {                                                       \
      fprintf(stderr, "%s:%d: expectation failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                        \
    }                                                                    \
  } while (0)

static int close_to(double a, double b, double rel) { return fabs(a - b) <= rel * fabs(b); }

static void progress(size_t done, size_t total, void* user) {
  (void)total;
  *(size_t*)user = done;
}

static void test_spectrum(void) {
  mb_spectrum* s = NULL;
  mb_spectrum_info info;
  double v = 0.0;
  EXPECT(close_to(mb_critical_zeta(), 16533720.0 / 4281953.0, 1e-15));
  EXPECT(mb_spectrum_create(1.0, &s) == MB_OK);
  EXPECT(mb_spectrum_info_get(s, &info) == MB_OK);
  EXPECT(close_to(info.kappa1, 0.503047694364528775, 1e-12));
  EXPECT(close_to(info.kappa2, 0.811813957516334102, 1e-12));
  EXPECT(close_to(info.masses[0] + info.masses[1] + info.masses[2], 1.0, 1e-12));
  EXPECT(mb_spectrum_quantile(s, 0.5, &v) == MB_OK);
  {
    double c = 0.0;
    EXPECT(mb_spectrum_cumulative(s, v, &c) == MB_OK);
    EXPECT(close_to(c, 0.5, 1e-10));
  }
  EXPECT(mb_spectrum_energy(s, -1.0, &v) == MB_ERR_DOMAIN);
  EXPECT(strlen(mb_last_error()) > 0);
  EXPECT(strcmp(mb_status_name(MB_ERR_DOMAIN), "") != 0);
  mb_spectrum_destroy(s);

  EXPECT(mb_spectrum_create(5.0, &s) == MB_ERR_DOMAIN);
  EXPECT(mb_spectrum_create(0.0, NULL) == MB_ERR_INVALID_ARGUMENT);
  EXPECT(mb_spectrum_create(0.0, &s) == MB_OK);
  EXPECT(mb_correlation_trace(s, 1.0, &v) == MB_OK);
  EXPECT(close_to(v, 0.8704783066080606, 1e-9));
  EXPECT(mb_spectrum_info_get(s, &info) == MB_OK);
  EXPECT(isinf(info.kappa2));
  EXPECT(mb_temporal_correlation(0.212, 0.212, &v) == MB_OK);
  EXPECT(close_to(v, exp(-0.5), 1e-14));
  mb_spectrum_destroy(s);
  mb_spectrum_destroy(NULL);
}

static void test_fluctuations(void) {
  mb_spectrum* s = NULL;
  mb_params *p = NULL, *q = NULL;
  const double x[3] = {0.1, 0.2, 0.3}, u[3] = {0.0, 0.0, 0.0};
  double a[3], b[3];
  EXPECT(mb_spectrum_create(0.0, &s) == MB_OK);
  EXPECT(mb_params_draw(s, 50, 1, 2, MB_BRANCH_REAL, &p) == MB_OK);
  EXPECT(mb_params_draw(s, 50, 1, 2, MB_BRANCH_REAL, &q) == MB_OK);
  EXPECT(mb_params_modes(p) == 50);
  EXPECT(mb_local_fluctuation(p, x, 0.1, u, 0.212, a) == MB_OK);
  EXPECT(mb_local_fluctuation(q, x, 0.1, u, 0.212, b) == MB_OK);
  EXPECT(memcmp(a, b, sizeof a) == 0);
  mb_params_destroy(q);
  EXPECT(mb_params_draw(s, 0, 1, 2, MB_BRANCH_REAL, &q) == MB_ERR_DOMAIN);
  EXPECT(mb_params_draw(s, 10, 1, 2, 7, &q) == MB_ERR_INVALID_ARGUMENT);
  mb_params_destroy(p);
  mb_spectrum_destroy(s);
}

static void test_flow_and_simulation(void) {
  mb_jet_params jp;
  mb_flow* f = NULL;
  mb_flow_sample fs;
  mb_sim_config cfg;
  mb_trajectory* tr = NULL;
  mb_trajectory_point first, last;
  char text[256];
  const double origin[3] = {0.0, 0.0, 0.0}, outside[3] = {0.0, 0.0, -5.0};
  size_t n, i;
  int monotone = 1;

  mb_jet_params_default(&jp);
  EXPECT(mb_flow_create_synthetic(&jp, &f) == MB_OK);
  EXPECT(mb_flow_describe(f, text, sizeof text) == MB_OK);
  EXPECT(strlen(text) > 0);
  EXPECT(mb_flow_sample_at(f, origin, 0.0, &fs) == MB_OK);
  EXPECT(close_to(fs.mean_velocity[2], -400.0, 1e-12));
  EXPECT(mb_flow_sample_at(f, outside, 0.0, &fs) == MB_ERR_DOMAIN_EXIT);

  mb_sim_config_default(&cfg);
  cfg.horizon = 5e-4;
  EXPECT(mb_simulate(f, NULL, &cfg, &tr) == MB_OK);
  n = mb_trajectory_size(tr);
  EXPECT(n > 2);
  EXPECT(mb_trajectory_termination(tr) == MB_TERMINATION_HORIZON);
  EXPECT(mb_trajectory_point_get(tr, 0, &first) == MB_OK);
  EXPECT(mb_trajectory_point_get(tr, n - 1, &last) == MB_OK);
  EXPECT(first.e == 1.0 && first.t == 0.0);
  EXPECT(close_to(last.t, 5e-4, 1e-14));
  for (i = 1; i < n; ++i) {
    mb_trajectory_point a, b;
    mb_trajectory_point_get(tr, i - 1, &a);
    mb_trajectory_point_get(tr, i, &b);
    monotone = monotone && b.e >= a.e && b.t > a.t;
  }
  EXPECT(monotone);
  EXPECT(mb_trajectory_point_get(tr, n, &last) == MB_ERR_DOMAIN);
  mb_trajectory_destroy(tr);

  cfg.dt_min = 1e-3;
  tr = NULL;
  EXPECT(mb_simulate(f, NULL, &cfg, &tr) == MB_ERR_NUMERICAL);
  EXPECT(tr == NULL);
  mb_sim_config_default(&cfg);
  cfg.v0 = -1.0;
  EXPECT(mb_simulate(f, NULL, &cfg, &tr) == MB_ERR_VALIDATION);
  EXPECT(mb_simulate(NULL, NULL, &cfg, &tr) == MB_ERR_INVALID_ARGUMENT);

  jp.inlet_speed = -1.0;
  {
    mb_flow* g = NULL;
    EXPECT(mb_flow_create_synthetic(&jp, &g) == MB_ERR_VALIDATION);
  }
  {
    mb_flow* g = NULL;
    EXPECT(mb_flow_load_csv("/nonexistent/flow.csv", NULL, &g) == MB_ERR_IO);
    EXPECT(g == NULL);
  }
  mb_flow_destroy(f);
}

static void test_montecarlo(void) {
  mb_jet_params jp;
  mb_flow* f = NULL;
  mb_sim_config cfg;
  mb_mc_options opt;
  mb_montecarlo* mc = NULL;
  mb_level_summary lv;
  const double heights[1] = {-0.01};
  size_t seen = 0;

  mb_jet_params_default(&jp);
  EXPECT(mb_flow_create_synthetic(&jp, &f) == MB_OK);
  mb_sim_config_default(&cfg);
  cfg.horizon = 2e-4;
  mb_mc_options_default(&opt);
  opt.samples = 3;
  opt.heights = heights;
  opt.n_heights = 1;
  opt.seed = 4;
  EXPECT(mb_montecarlo_run(f, &cfg, &opt, progress, &seen, &mc) == MB_OK);
  EXPECT(seen == 3);
  EXPECT(mb_montecarlo_failures(mc) == 0);
  EXPECT(mb_montecarlo_level(mc, 1, &lv) == MB_OK);
  EXPECT(isnan(lv.height));
  EXPECT(lv.count == 3);
  EXPECT(lv.min <= lv.median && lv.median <= lv.max);
  EXPECT(mb_montecarlo_level(mc, 2, &lv) == MB_ERR_DOMAIN);
  mb_montecarlo_destroy(mc);
  opt.samples = 0;
  EXPECT(mb_montecarlo_run(f, &cfg, &opt, NULL, NULL, &mc) == MB_ERR_DOMAIN);
  mb_flow_destroy(f);
}

static void test_statistics(void) {
  const double x[7] = {-0.809135, 0.059104, -0.489595, 0.854562, -0.971549, 0.876603, -1.195302};
  const double flat[5] = {1, 1, 1, 1, 1};
  double w = 0.0, p = 0.0, cov[1], se[1], tr, tr_se;
  mb_normality nr;
  mb_rejection_config rc;
  const size_t modes[1] = {50}, variates[2] = {1, 2};
  double freq[2] = {-1.0, -1.0};

  EXPECT(mb_shapiro_wilk(x, 7, &w, &p) == MB_OK);
  EXPECT(close_to(w, 0.8856280506847438, 1e-9));
  EXPECT(close_to(p, 0.25262521247501324, 1e-6));
  EXPECT(mb_shapiro_wilk(x, 2, &w, &p) == MB_ERR_DOMAIN);
  EXPECT(mb_shapiro_wilk(flat, 5, &w, &p) == MB_ERR_VALIDATION);
  EXPECT(mb_royston(x, 7, 1, MB_ROYSTON_SHAPIRO_WILK, &nr) == MB_OK);
  EXPECT(close_to(nr.p_value, 0.25262521247501324, 1e-6));
  EXPECT(mb_royston(x, 7, 1, 9, &nr) == MB_ERR_INVALID_ARGUMENT);

  EXPECT(mb_covariance(x, x, 7, 1, 1, cov, se, &tr, &tr_se) == MB_OK);
  EXPECT(cov[0] > 0.0 && close_to(tr, cov[0], 1e-15));

  mb_rejection_config_default(&rc);
  rc.modes = modes;
  rc.n_modes = 1;
  rc.variates = variates;
  rc.n_variates = 2;
  rc.replications = 5;
  rc.sample_size = 10;
  EXPECT(mb_rejection_experiment(&rc, freq) == MB_OK);
  EXPECT(freq[0] >= 0.0 && freq[0] <= 1.0 && freq[1] >= 0.0 && freq[1] <= 1.0);
}

int main(void) {
  EXPECT(strlen(mb_version()) > 0);
  test_spectrum();
  test_fluctuations();
  test_flow_and_simulation();
  test_montecarlo();
  test_statistics();
  if (failures) {
    fprintf(stderr, "%d expectation(s) failed\n", failures);
    return 1;
  }
  printf("C interface: all expectations met\n");
  return 0;
}
