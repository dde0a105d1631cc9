#include <math.h>
#include <stdio.h>
#include <string.h>

#include "rydberg_xpm.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    RxpmModel *m = NULL;
    CHECK(rxpm_model_new_default(&m) == RXPM_STATUS_OK);

    double od = 0.0, phase = 0.0;
    CHECK(rxpm_od_phase(m, -10.0, &od, &phase) == RXPM_STATUS_OK);
    CHECK(fabs(phase + 2.0708535) < 1e-6);

    RxpmControlledPhase cp;
    CHECK(rxpm_controlled_phase(m, -10.0, false, &cp) == RXPM_STATUS_OK);
    CHECK(fabs(cp.controlled_phase - 3.0292) < 1e-3);

    double grid[2] = {1.0, 0.0}, t[2], p[2];
    CHECK(rxpm_spectrum(m, grid, 2, t, p) == RXPM_STATUS_INVALID_ARGUMENT);
    char msg[256];
    size_t n = rxpm_last_error_message(msg, sizeof msg);
    CHECK(n > 0 && strstr(msg, "increasing") != NULL);

    rxpm_model_free(m);

    RxpmModel *bad = NULL;
    CHECK(rxpm_model_from_json("{\"nope\": 1}", &bad) == RXPM_STATUS_INVALID_ARGUMENT);
    CHECK(bad == NULL);

    printf("ok %s %.6f\n", rxpm_version(), cp.controlled_phase);
    return 0;
}
