#include <math.h>
#include <stdio.h>
#include <string.h>

#include "flapkit.h"

#define CHECK(cond)                                                        \
    do {                                                                   \
        if (!(cond)) {                                                     \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond);     \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    double k = 0.0;
    CHECK(flapkit_required_stiffness(0.26e-6, 1.4e-3, 130.0, &k) == FLAPKIT_STATUS_OK);
    CHECK(fabs(k - 0.34e-6) / 0.34e-6 < 0.015);

    CHECK(flapkit_required_stiffness(1.0, 1.0, 1.0, NULL) == FLAPKIT_STATUS_NULL_POINTER);
    CHECK(flapkit_last_error() != NULL);

    FlapkitProject *p = NULL;
    CHECK(flapkit_project_from_json("{\"schema_version\": 1, \"colour\": 1}", &p) ==
          FLAPKIT_STATUS_CONFIG_ERROR);
    CHECK(p == NULL);
    CHECK(flapkit_project_load_device(&p) == FLAPKIT_STATUS_OK);

    double ohms = 0.0;
    CHECK(flapkit_coil_resistance(p, &ohms) == FLAPKIT_STATUS_OK);
    CHECK(ohms > 1.3 && ohms < 1.7);

    FlapkitSimulation *sim = NULL;
    CHECK(flapkit_simulate(p, 0.9075e-6, 30, &sim) == FLAPKIT_STATUS_OK);
    size_t n = flapkit_simulation_len(sim);
    CHECK(n > 0);
    FlapkitSample last;
    CHECK(flapkit_simulation_sample(sim, n - 1, &last) == FLAPKIT_STATUS_OK);
    CHECK(flapkit_simulation_sample(sim, n, &last) == FLAPKIT_STATUS_INVALID_ARGUMENT);
    FlapkitSummary sum;
    CHECK(flapkit_simulation_summary(sim, &sum) == FLAPKIT_STATUS_OK);
    CHECK(sum.stroke_amplitude > 0.5 && sum.stroke_amplitude < 1.0);

    size_t need = 0;
    CHECK(flapkit_sweep(p, 0.9075e-6, 130.0, 134.0, 3, 1, NULL, 0, &need) ==
          FLAPKIT_STATUS_BUFFER_TOO_SMALL);
    CHECK(need == 3);
    FlapkitSweepPoint pts[3];
    size_t written = 0;
    CHECK(flapkit_sweep(p, 0.9075e-6, 130.0, 134.0, 3, 1, pts, 3, &written) == FLAPKIT_STATUS_OK);
    CHECK(written == 3 && pts[0].ok && pts[1].frequency == 132.0);

    char *json = NULL;
    CHECK(flapkit_report_json(p, sim, &json) == FLAPKIT_STATUS_OK);
    CHECK(strstr(json, "\"config_sha256\"") != NULL);
    flapkit_string_free(json);

    flapkit_simulation_free(sim);
    flapkit_project_free(p);
    printf("ok\n");
    return 0;
}
