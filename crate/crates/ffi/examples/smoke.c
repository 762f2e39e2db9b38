/* Minimal C client: load a scenario, step it, print mode masses. */
#include <stdio.h>
#include "hybridfp.h"

static int fail(const char *what, HfpStatus st) {
    char msg[512];
    hfp_last_error_message(msg, sizeof msg);
    fprintf(stderr, "%s failed (%d): %s\n", what, (int)st, msg);
    return 1;
}

int main(int argc, char **argv) {
    if (argc < 2) {
        fprintf(stderr, "usage: %s CONFIG\n", argv[0]);
        return 2;
    }
    HfpScenario *sc = NULL;
    HfpStatus st = hfp_scenario_load(argv[1], &sc);
    if (st != HFP_STATUS_OK) return fail("load", st);

    HfpSolver *solver = NULL;
    st = hfp_solver_new(sc, &solver);
    hfp_scenario_free(sc);
    if (st != HFP_STATUS_OK) return fail("solver", st);

    size_t taken = 0;
    st = hfp_solver_step(solver, (size_t)-1, &taken);
    if (st != HFP_STATUS_OK) return fail("step", st);

    double t = 0, m1 = 0, m2 = 0;
    hfp_solver_time(solver, &t);
    hfp_solver_mode_mass(solver, 0, &m1);
    hfp_solver_mode_mass(solver, 1, &m2);
    printf("version %s steps %zu t %.6f mass %.12f %.12f total %.12f\n",
           hfp_version(), taken, t, m1, m2, m1 + m2);
    hfp_solver_free(solver);
    return 0;
}
