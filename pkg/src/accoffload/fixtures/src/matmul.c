/* 2048x2048 single-precision matrix multiply benchmark. */
#include <stdio.h>
#include <stdlib.h>
#include <math.h>
#include <time.h>

#define N 2048

static float A[N * N], B[N * N], C[N * N];
static float rownorm[N];

static double now(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return ts.tv_sec + ts.tv_nsec * 1e-9;
}

int main(void)
{
    int i, j, k;
    double sum = 0.0;
    double t0 = now();

    for (i = 0; i < N; i++) {
        for (j = 0; j < N; j++) {
            A[i * N + j] = (float)(i + j) / N;
        }
    }
    for (i = 0; i < N; i++) {
        for (j = 0; j < N; j++) {
            B[i * N + j] = (float)(i - j) / N;
        }
    }
    for (i = 0; i < N; i++) {
        for (j = 0; j < N; j++) {
            C[i * N + j] = 0.0f;
        }
    }

    for (i = 0; i < N; i++) {
        for (j = 0; j < N; j++) {
            for (k = 0; k < N; k++) {
                C[i * N + j] += A[i * N + k] * B[k * N + j];
            }
        }
    }

    for (i = 0; i < N; i++) {
        for (j = 0; j < N; j++) {
            rownorm[i] += C[i * N + j] * C[i * N + j];
        }
    }
    for (i = 0; i < N; i++) {
        rownorm[i] = sqrtf(rownorm[i]);
        sum += rownorm[i];
    }

    printf("checksum: %f\n", sum);
    printf("elapsed: %f s\n", now() - t0);
    return 0;
}
