/* Leveled logging to stderr. */
#include <stdio.h>

/* Severity levels. */
typedef enum {
    LOG_DEBUG,
    LOG_INFO,
    LOG_ERROR
} log_level_t;

static log_level_t g_level = LOG_INFO;

/* Prints a message at or above the current level. */
void log_Print(log_level_t level, const char *msg)
{
    if (level >= g_level) {
        fprintf(stderr, "%s\n", msg);
    }
}
