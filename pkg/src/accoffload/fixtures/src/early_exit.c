#include <stdio.h>

#define N 4096

float a[N];

int main(void)
{
    int i, first = -1;
    for (i = 0; i < N; i++) {
        a[i] = (float)(i % 17) - 8.0f;
    }
    for (i = 0; i < N; i++) {
        if (a[i] > 7.5f) {
            first = i;
            break;
        }
    }
    printf("%d\n", first);
    return 0;
}
