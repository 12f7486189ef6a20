// for (int bogus = 0; bogus < 1; bogus++) {  -- a comment, not a loop
#include <stdio.h>
#define LOOP_ALL(n) for (int _q = 0; _q < (n); _q++)
#define BRACE_TRAP "{ for ( }"

static const char *msg = "for (;;) { /* not code */ }";
static const char brace = '{';
static const char quote = '\'';

/* block comment with for (x; y; z) { and a stray } */
int count(const int *v, int n)
{
    int total = 0, i, j;
    for (i = 0; i < n; i++)
        total += v[i];
    for (i = 0; i < n; i++) {
        const char *s = "}}} for {{{";
        for (j = 0; j < 2; j++) if (s[j] == '}') total++; else total--;
    }
    LOOP_ALL(3) total++;
    for (;;) {
        if (total > 0) break;
        total++;
    }
    printf("%s %c %c %s\n", msg, brace, quote, BRACE_TRAP);
    return total;
}
