#include <stdio.h>

#define N 4096

float a[N], b[N];

int main(void)
{
    int i;
    for (i = 0; i < N; i++) {
        b[i] = 0.5f * i;
    }
    a[0] = b[0];
    for (i = 1; i < N; i++) {
        a[i] = a[i - 1] + b[i];   /* prefix sum */
    }
    printf("%f\n", a[N - 1]);
    return 0;
}
