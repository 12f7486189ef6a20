#include <stdio.h>

#define N 1024

float m[N][N], v[N];

int main(void)
{
    int i, j;
#pragma acc parallel loop
    for (i = 0; i < N; i++) {
        for (j = 0; j < N; j++) {
            m[i][j] = i * 0.5f + j;
        }
    }
    for (i = 0; i < N; i++) {
        v[i] = m[i][i];
    }
    printf("%f\n", v[N - 1]);
    return 0;
}
