#include <math.h>
#include <stdio.h>
#include <string.h>

#include "chiral_casimir.h"

#define CHECK(cond)                                            \
    do {                                                       \
        if (!(cond)) {                                         \
            fprintf(stderr, "line %d: %s\n", __LINE__, #cond); \
            return 1;                                          \
        }                                                      \
    } while (0)

int main(void) {
    const double omega[3] = {0.99e-4, 1.0e-4, 1.013e-4};
    const double zero[3] = {0.0, 0.0, 0.0};
    const double curly_b[3] = {0.0, 0.0, 0.01};
    CcParams *p = NULL;

    CHECK(cc_params_new(1836.0, 0.0, 0.0, omega, zero, zero, &p) == CC_STATUS_OK);
    CHECK(cc_params_set_dimensionless(p, 0.01, curly_b) == CC_STATUS_OK);

    CcMomentum m;
    CHECK(cc_compute(p, CC_ORIENTATION_AVERAGED, &m) == CC_STATUS_OK);
    CHECK(m.p_total[2] != 0.0);
    CHECK(m.p_total[2] == m.p_perp[2] + m.p_par[2]);
    CHECK(m.ledger_residual == 0.0);
    CHECK(isnan(m.fock_coefficient));

    double w = 0.0, de = 0.0;
    CHECK(cc_energy_balance(p, CC_ORIENTATION_AVERAGED, 10000, &w, &de) == CC_STATUS_OK);
    CHECK(fabs(w - de) <= 1e-7 * fabs(de));
    cc_params_free(p);

    /* equal masses are rejected with a coded message */
    CHECK(cc_params_new(1.0, 0.0, 0.0, omega, zero, zero, &p) == CC_STATUS_INVALID_INPUT);
    CHECK(strcmp(cc_last_error_code(), "params.DegenerateMasses") == 0);
    CHECK(cc_compute(NULL, CC_ORIENTATION_AVERAGED, &m) == CC_STATUS_NULL_POINTER);

    printf("ok %s\n", cc_version());
    return 0;
}
