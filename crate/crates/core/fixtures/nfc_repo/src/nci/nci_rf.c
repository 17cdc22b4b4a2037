/* Discovery loop: polling technologies and discovery notifications. */
#include "nci_msg.h"

/* Polling technologies understood by the discovery loop. */
enum rf_technology {
    RF_TECH_A,
    RF_TECH_B,
    RF_TECH_F,
    RF_TECH_V
};

/* Most technologies accepted in one discovery request. */
#define RF_MAX_TECHNOLOGIES 8

static int g_discovering;

/* Starts RF discovery with the list of polling technologies. */
int nciRf_StartDiscovery(const enum rf_technology *techs, int count)
{
    if (count > RF_MAX_TECHNOLOGIES) {
        return -1;
    }
    g_discovering = 1;
    return 0;
}

/* Stops RF discovery and discards pending discovery notifications. */
int nciRf_StopDiscovery(void)
{
    g_discovering = 0;
    return 0;
}

/* Handles one discovery notification reported by the controller. */
int nciRf_OnDiscoverNtf(const uint8_t *ntf, int len)
{
    return g_discovering && len > 0 ? ntf[0] : -1;
}
