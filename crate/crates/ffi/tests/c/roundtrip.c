/* Builds a one-phase profile through the C interface and checks it. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "appdiff.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        AppdiffStatus st_ = (call);                                        \
        if (st_ != APPDIFF_STATUS_OK) {                                    \
            const char *m_ = appdiff_last_error();                         \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_, m_ ? m_ : ""); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(int argc, char **argv) {
    if (argc != 3) {
        fprintf(stderr, "usage: roundtrip <before-root> <after-root>\n");
        return 2;
    }
    AppdiffSnapshot *before = NULL, *after = NULL;
    AppdiffDiff *diff = NULL;
    AppdiffProfile *profile = NULL, *parsed = NULL;
    AppdiffTarget *target = NULL;
    char *text = NULL, *report = NULL;

    CHECK(appdiff_snapshot_capture(argv[1], NULL, false, false, &before));
    CHECK(appdiff_snapshot_capture(argv[2], NULL, false, true, &after));
    CHECK(appdiff_diff(before, after, &diff));
    printf("new=%zu\n", appdiff_diff_count(diff, APPDIFF_DELTA_STATE_NEW));

    CHECK(appdiff_profile_new("Demo", "1.0", &profile));
    CHECK(appdiff_profile_add_phase(profile, "install", diff));
    CHECK(appdiff_profile_emit(profile, &text));
    CHECK(appdiff_validate(text, NULL));
    CHECK(appdiff_profile_parse(text, true, &parsed));
    printf("objects=%zu\n", appdiff_profile_object_count(parsed));

    CHECK(appdiff_target_build(argv[2], NULL, false, &target));
    AppdiffMatchPolicy policy = appdiff_match_policy_default();
    CHECK(appdiff_match(parsed, target, &policy, false, &report));
    fputs(report, stdout);

    AppdiffProfile *bad = NULL;
    if (appdiff_profile_parse("<apxml", false, &bad) != APPDIFF_STATUS_PARSE || bad != NULL) {
        fprintf(stderr, "malformed text accepted\n");
        return 1;
    }
    if (appdiff_last_error() == NULL) {
        fprintf(stderr, "no error message\n");
        return 1;
    }

    appdiff_string_free(report);
    appdiff_string_free(text);
    appdiff_target_free(target);
    appdiff_profile_free(parsed);
    appdiff_profile_free(profile);
    appdiff_diff_free(diff);
    appdiff_snapshot_free(after);
    appdiff_snapshot_free(before);
    return 0;
}
