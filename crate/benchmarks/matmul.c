/* Dense square matrix multiply, the workload used by the bundled demos.
 *
 * Usage: matmul [N]   (default 256)
 *
 * The i-k-j loop order keeps the inner loop stride-1 over both B and C,
 * which is where optimizing compilers find the most room. The checksum is
 * printed so the multiply cannot be eliminated as dead code.
 */
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    long n = 256;
    if (argc > 1) {
        n = strtol(argv[1], NULL, 10);
        if (n < 1) {
            fprintf(stderr, "matmul: bad size %s\n", argv[1]);
            return 1;
        }
    }

    double *a = malloc((size_t)n * n * sizeof *a);
    double *b = malloc((size_t)n * n * sizeof *b);
    double *c = calloc((size_t)n * n, sizeof *c);
    if (!a || !b || !c) {
        fprintf(stderr, "matmul: out of memory for N=%ld\n", n);
        return 1;
    }

    /* Deterministic fill: values in (0, 1), no libc rand() so every build
     * multiplies identical matrices. */
    unsigned long seed = 0x9e3779b97f4a7c15UL;
    for (long i = 0; i < n * n; i++) {
        seed = seed * 6364136223846793005UL + 1442695040888963407UL;
        a[i] = (double)(seed >> 11) / 9007199254740992.0;
        seed = seed * 6364136223846793005UL + 1442695040888963407UL;
        b[i] = (double)(seed >> 11) / 9007199254740992.0;
    }

    for (long i = 0; i < n; i++)
        for (long k = 0; k < n; k++) {
            double aik = a[i * n + k];
            for (long j = 0; j < n; j++)
                c[i * n + j] += aik * b[k * n + j];
        }

    double checksum = 0.0;
    for (long i = 0; i < n * n; i += n + 1)
        checksum += c[i];
    printf("%ld %.6f\n", n, checksum);

    free(a);
    free(b);
    free(c);
    return 0;
}
