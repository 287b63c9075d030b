#include <stdio.h>
#include <string.h>
#include "dualiscope.h"

static int fail(const char *what) {
    const char *e = ds_last_error();
    fprintf(stderr, "%s: %s\n", what, e ? e : "(no message)");
    return 1;
}

int main(void) {
    ds_process *p = NULL;
    if (ds_process_new("{\"variant\":\"SEP\",\"n\":2}", "{\"kind\":\"cycle\",\"sites\":3}", &p) != DS_OK)
        return fail("ds_process_new");
    uint32_t xi[3] = {1, 0, 2};
    uint32_t eta[3] = {2, 1, 2};
    double d = 0.0;
    if (ds_process_duality(p, xi, eta, 3, &d) != DS_OK)
        return fail("ds_process_duality");
    char *report = NULL;
    if (ds_process_verify_duality(p, 2, 2, &report) != DS_OK)
        return fail("ds_process_verify_duality");
    int zero = strstr(report, "\"max_abs_residual\":\"0\"") != NULL;
    ds_string_free(report);
    ds_process_free(p);

    ds_process *bad = NULL;
    ds_status s = ds_process_new("{\"variant\":\"SIP\"}", "{\"kind\":\"two-site\"}", &bad);
    const char *msg = ds_last_error();
    printf("version=%s duality=%.17g residual_zero=%d bad_status=%d bad_null=%d has_message=%d\n",
           ds_version(), d, zero, (int)s, bad == NULL, msg != NULL);
    return 0;
}
