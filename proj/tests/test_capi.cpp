// Exercises the shared-library surface the way an external C client would:
// only fdctmc.h, opaque handles, status codes, and report getters.

#include <cmath>
#include <cstdio>
#include <cstring>

#include "fdctmc.h"

static int failures = 0;

#define EXPECT(cond)                                                       \
  do {                                                                     \
    if (!(cond)) {                                                         \
      std::fprintf(stderr, "FAIL %s:%d: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                          \
    }                                                                      \
  } while (0)

static const char* kModel =
    "states: init lost OK\n"
    "rate: 1\n"
    "init: init\n"
    "goal: OK\n"
    "fd: init lost\n"
    "P: init lost 0.2\n"
    "P: init OK 0.8\n"
    "P: lost lost 1\n"
    "P: OK OK 1\n"
    "F: init init 1\n"
    "F: lost init 1\n"
    "R: init 1\n"
    "R: lost 1\n"
    "R: OK 1\n"
    "IF: init init 3\n"
    "IF: lost init 3\n";

static const char* kTwoRates =
    "states: a t b\n"
    "rate: 1\n"
    "init: a\n"
    "goal: t\n"
    "fd: a b\n"
    "P: a t 1\n"
    "P: b t 1\n"
    "P: t t 1\n"
    "F: a b 1\n"
    "F: b a 1\n"
    "R: a 2\n"
    "R: b 1\n"
    "R: t 1\n";

int main() {
  EXPECT(std::strlen(fdc_version()) > 0);

  fdc_model* bad = nullptr;
  EXPECT(fdc_model_parse("states: a\n", &bad) == FDC_ERR_MODEL);
  EXPECT(bad == nullptr);
  EXPECT(std::strlen(fdc_last_error()) > 0);

  fdc_model* model = nullptr;
  EXPECT(fdc_model_parse(kModel, &model) == FDC_OK);

  fdc_report* rep = nullptr;
  EXPECT(fdc_validate(model, 1, &rep) == FDC_OK);
  double diags = -1.0;
  EXPECT(fdc_report_get(rep, "diagnostics", &diags) == 1);
  EXPECT(diags == 0.0);
  fdc_report_free(rep);

  // analyze at the constant timeout 1: the classic 4.33 figure
  fdc_options opts;
  fdc_options_init(&opts);
  EXPECT(fdc_analyze(model, "init 1\nlost 1\n", &opts, &rep) == FDC_OK);
  double value = 0.0, reach = 0.0;
  EXPECT(fdc_report_get(rep, "value", &value) == 1);
  EXPECT(std::fabs(value - 4.3279) < 1e-3);
  EXPECT(fdc_report_get(rep, "reach.OK", &reach) == 1);
  EXPECT(std::fabs(reach - 1.0) < 1e-9);
  EXPECT(std::strstr(fdc_report_kv(rep), "value = ") != nullptr);
  EXPECT(std::strstr(fdc_report_text(rep), "expected total cost") != nullptr);
  // the machine block round-trips: re-rendering the parsed double reproduces
  // the emitted string bit for bit
  {
    const char* printed = fdc_report_get_str(rep, "value");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    EXPECT(printed != nullptr && std::strcmp(printed, buf) == 0);
  }
  fdc_report_free(rep);

  // a delays file that misses an fd state is a model error
  EXPECT(fdc_analyze(model, "init 1\n", &opts, &rep) == FDC_ERR_MODEL);

  EXPECT(fdc_params(model, &opts, &rep) == FDC_OK);
  double d1 = 0.0, vmax = 0.0;
  EXPECT(fdc_report_get(rep, "D1", &d1) == 1);
  EXPECT(d1 == 12.0);
  EXPECT(fdc_report_get(rep, "vmax", &vmax) == 1);
  EXPECT(std::fabs(vmax - 4.3279) < 1e-3);
  const char* source = fdc_report_get_str(rep, "vmax_source");
  EXPECT(source != nullptr && std::strstr(source, "heuristic") != nullptr);
  fdc_report_free(rep);

  EXPECT(fdc_simulate(model, "init 1\nlost 1\n", &opts, &rep) == FDC_OK);
  double mean = 0.0, se = 0.0;
  EXPECT(fdc_report_get(rep, "mean", &mean) == 1);
  EXPECT(fdc_report_get(rep, "std_error", &se) == 1);
  EXPECT(std::fabs(mean - 4.3279) <= 4.0 * se);
  fdc_report_free(rep);

  fdc_model_free(model);

  // synthesis on the two-rates model through the C surface
  fdc_model* rates = nullptr;
  EXPECT(fdc_model_parse(kTwoRates, &rates) == FDC_OK);
  fdc_options sopts;
  fdc_options_init(&sopts);
  sopts.delta = 1e-3;
  sopts.dmax = 5.0;
  sopts.kappa = 1e-9;
  EXPECT(fdc_synth(rates, &sopts, &rep) == FDC_OK);
  double sval = 0.0, da = 0.0, db = 0.0, guarantee = 1.0;
  EXPECT(fdc_report_get(rep, "value", &sval) == 1);
  EXPECT(sval <= 1.1);
  EXPECT(fdc_report_get(rep, "delay.a", &da) == 1);
  EXPECT(fdc_report_get(rep, "delay.b", &db) == 1);
  EXPECT(da < db);
  EXPECT(fdc_report_get(rep, "guarantee", &guarantee) == 1);
  EXPECT(guarantee == 0.0);
  fdc_report_free(rep);

  // infeasible mesh surfaces as the infeasible status
  fdc_options bad_mesh;
  fdc_options_init(&bad_mesh);
  bad_mesh.delta = 10.0;
  bad_mesh.dmax = 5.0;
  bad_mesh.kappa = 0.0;
  EXPECT(fdc_synth(rates, &bad_mesh, &rep) == FDC_ERR_INFEASIBLE);
  fdc_model_free(rates);

  // the SAT reduction emits a model file that parses back
  fdc_report* gadget = nullptr;
  EXPECT(fdc_gen_sat("p cnf 1 1\n1 0\n", &gadget) == FDC_OK);
  double states = 0.0, dmax = 0.0;
  EXPECT(fdc_report_get(gadget, "states", &states) == 1);
  EXPECT(states == 11.0);
  EXPECT(fdc_report_get(gadget, "dmax", &dmax) == 1);
  EXPECT(dmax == 16.0);
  EXPECT(fdc_report_get_str(gadget, "warning") != nullptr);
  fdc_model* parsed_gadget = nullptr;
  EXPECT(fdc_model_parse(fdc_report_get_str(gadget, "model"), &parsed_gadget) == FDC_OK);
  fdc_model_free(parsed_gadget);
  fdc_report_free(gadget);

  if (failures == 0) std::printf("capi_tests: all checks passed\n");
  return failures == 0 ? 0 : 1;
}
