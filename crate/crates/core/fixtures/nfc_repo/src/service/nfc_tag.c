/* Tag reader front end for applications. */
#include "nfc_service.h"
#include "ndef.h"

#define TAG_MAX_READERS 4

/* Callback invoked with each decoded message. */
typedef void (*tag_listener_t)(const ndef_msg_t *msg);

static tag_listener_t listeners[TAG_MAX_READERS];

/* Registers an application listener. */
int nfcTag_Register(tag_listener_t fn)
{
    for (int i = 0; i < TAG_MAX_READERS; i++) {
        if (!listeners[i]) {
            listeners[i] = fn;
            return i;
        }
    }
    return -1;
}

/* Hands a decoded message to every registered listener. */
void nfcTag_Deliver(const ndef_msg_t *msg)
{
    for (int i = 0; i < TAG_MAX_READERS; i++) {
        if (listeners[i]) {
            listeners[i](msg);
        }
    }
}
