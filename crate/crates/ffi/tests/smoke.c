#include <stdio.h>
#include <string.h>

#include "impatient.h"

int main(void) {
    double v = 0.0;
    if (imp_korshunov_constant(2, &v) != IMP_STATUS_OK || v < 0.5936 || v > 0.5937) {
        return 1;
    }
    if (imp_lambert_w0(-1.0, &v) != IMP_STATUS_DOMAIN || imp_last_error_message() == NULL) {
        return 2;
    }
    char *s = NULL;
    if (imp_stirling_exact(7, 3, &s) != IMP_STATUS_OK || strcmp(s, "301") != 0) {
        return 3;
    }
    imp_string_free(s);

    ImpCurve *c = NULL;
    if (imp_curve_solve(1.0, 0.1, 1e-3, &c) != IMP_STATUS_OK || imp_curve_len(c) != 1901) {
        return 4;
    }
    imp_curve_free(c);

    ImpSampler *sm = NULL;
    uint32_t y[21];
    if (imp_sampler_new(20, 8, IMP_BACKEND_AUTO, &sm) != IMP_STATUS_OK) {
        return 5;
    }
    if (imp_sampler_sample(sm, 1, 0, y, 21) != IMP_STATUS_OK || y[20] != 8) {
        return 6;
    }
    imp_sampler_free(sm);
    printf("ok\n");
    return 0;
}
