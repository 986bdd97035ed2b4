#include <math.h>
#include <stdio.h>
#include "nclab.h"

int main(void) {
    NclabFiltration *f = NULL;
    if (nclab_filtration_new(NCLAB_FAMILY_TENSOR_DYADIC, 2, &f) != NCLAB_STATUS_OK) return 1;
    double re[16] = {0};
    for (int i = 0; i < 4; i++) re[5 * i] = 1.0 + i;
    NclabMartingale *m = NULL;
    if (nclab_martingale_from_operator(f, re, NULL, 4, &m) != NCLAB_STATUS_OK) return 2;
    double h = 0.0, l = 0.0;
    if (nclab_hardy_norm(m, NCLAB_HARDY_KIND_CONDITIONED_COLUMN, 1.0, &h) != NCLAB_STATUS_OK) return 3;
    if (nclab_lp_norm(m, 1.0, &l) != NCLAB_STATUS_OK) return 4;
    if (!(l <= sqrt(2.0) * h + 1e-12)) return 5;
    nclab_filtration_free(f);
    if (nclab_filtration_new(NCLAB_FAMILY_TENSOR_DYADIC, 0, &f) == NCLAB_STATUS_OK) return 6;
    if (nclab_last_error_message() == NULL) return 7;
    nclab_martingale_free(m);
    printf("h=%.6f l=%.6f\n", h, l);
    return 0;
}
