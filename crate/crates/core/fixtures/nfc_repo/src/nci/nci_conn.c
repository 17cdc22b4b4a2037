/* Data packets and credits flow control. */
#include "nci_msg.h"

#define NCI_MAX_CONNS 4

/* Credits left per connection. */
static int g_credits[NCI_MAX_CONNS];

/* Sends a data packet when a credit is available for the connection. */
int nciConn_SendData(int conn, const uint8_t *data, int len)
{
    if (g_credits[conn] == 0) {
        return -1;
    }
    g_credits[conn]--;
    return len;
}

/* Credits returned by the NFCC for consumed packets. */
void nciConn_OnCredits(int conn, int credits)
{
    g_credits[conn] += credits;
}
