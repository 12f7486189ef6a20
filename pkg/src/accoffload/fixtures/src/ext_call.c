#include <stdio.h>

#define N 4096

extern void log_value(int i, float v);

float a[N], b[N];

int main(void)
{
    int i;
    for (i = 0; i < N; i++) {
        a[i] = 2.0f * i;
    }
    for (i = 0; i < N; i++) {
        b[i] = a[i] + 1.0f;
        log_value(i, b[i]);
    }
    printf("%f\n", b[N - 1]);
    return 0;
}
