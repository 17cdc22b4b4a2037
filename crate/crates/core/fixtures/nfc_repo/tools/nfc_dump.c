/* Offline decoder for captured frame logs. */
#include <stdio.h>

/* Prints one captured frame as hex. */
void dump_Frame(const unsigned char *buf, int len)
{
    for (int i = 0; i < len; i++) {
        printf("%02x", buf[i]);
    }
    printf("\n");
}
