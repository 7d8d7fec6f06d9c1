/* Classifies a prior, evaluates its marginal and runs a short risk check.
 *
 *   cc demo.c -I../include ../../../target/debug/libsteinlab_ffi.a -lpthread -ldl -lm
 */
#include <stdio.h>

#include "steinlab.h"

static int check(SteinlabStatus s, const char *what) {
    if (s != STEINLAB_STATUS_OK) {
        const char *msg = steinlab_last_error();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg ? msg : "?");
        return 1;
    }
    return 0;
}

int main(void) {
    SteinlabVerdict v;
    if (check(steinlab_classify(6, 1.0, 0.0, 0.0, &v), "classify")) return 1;
    printf("admissibility=%d minimax=%d integral_diverges=%d\n", v.admissibility, v.minimax,
           v.integral_diverges);

    SteinlabMarginal *m = NULL;
    if (check(steinlab_marginal_new(6, 1.0, 0.0, 0.0, &m), "marginal_new")) return 1;
    double m0 = 0.0;
    if (check(steinlab_marginal_eval(m, 2.0, 0, &m0), "marginal_eval")) return 1;
    printf("M0(2)=%.15f\n", m0);
    steinlab_marginal_free(m);

    SteinlabEstimator *e = NULL;
    if (check(steinlab_estimator_new(STEINLAB_ESTIMATOR_KIND_POINT_PRIOR, 4, 0.0, 0.0, 0.0, 1.0, &e),
              "estimator_new"))
        return 1;
    SteinlabRiskPoint r;
    if (check(steinlab_mc_risk(e, 0.0, 20000, 7, &r), "mc_risk")) return 1;
    printf("risk=%.4f se=%.4f\n", r.risk, r.se);
    steinlab_estimator_free(e);

    SteinlabStatus s = steinlab_marginal_new(2, 0.0, 0.0, 0.0, &m);
    printf("d=2 status=%d\n", (int)s);
    return s == STEINLAB_STATUS_INVALID_PARAMS ? 0 : 1;
}
