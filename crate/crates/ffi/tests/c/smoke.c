#include <math.h>
#include <stdio.h>
#include <string.h>

#include "berg_op_lab.h"

#define SYMBOLS                  \
    "p = 2\n"                    \
    "q = 2\n"                    \
    "u = { poly = [1] }\n"       \
    "v = { poly = [0] }\n"       \
    "phi = { poly = [0, 0.5] }\n" \
    "psi = { poly = [0] }\n"

static const char *CONFIG = "task = \"schatten\"\nalpha = 0\n" SYMBOLS;
static const char *BAD_CONFIG = "task = \"schatten\"\nalpha = -1.5\n" SYMBOLS;

int main(void) {
    BolConfig *cfg = NULL;
    BolReport *report = NULL;
    double hs = 0.0;
    char *verdict = NULL;

    if (bol_config_parse(BAD_CONFIG, &cfg) != BOL_STATUS_CONFIG) {
        fprintf(stderr, "bad config accepted\n");
        return 1;
    }
    if (bol_last_error() == NULL || strstr(bol_last_error(), "alpha") == NULL) {
        fprintf(stderr, "missing error message\n");
        return 1;
    }
    if (bol_config_parse(CONFIG, &cfg) != BOL_STATUS_OK || bol_run(cfg, &report) != BOL_STATUS_OK) {
        fprintf(stderr, "run failed: %s\n", bol_last_error());
        return 1;
    }
    if (bol_report_quantity(report, "frobenius_sq", &hs) != BOL_STATUS_OK || fabs(hs - 4.0 / 3.0) > 1e-10) {
        fprintf(stderr, "unexpected S2 norm %g: %s\n", hs, bol_last_error());
        return 1;
    }
    if (bol_report_verdict(report, "operator", &verdict) != BOL_STATUS_OK) {
        fprintf(stderr, "no verdict: %s\n", bol_last_error());
        return 1;
    }
    printf("version %s, S2^2 = %.12f, operator %s, exit code %d\n", bol_version(), hs, verdict, bol_report_exit_code(report));
    bol_string_free(verdict);
    bol_report_free(report);
    bol_config_free(cfg);
    return 0;
}
