/* Board wiring tables for PN54x boards. */
#include "phTmlNfc_i2c.h"

/* I2C hardware configuration of the pins for the NCI interface: the DH
 * logical connection line, the RF interface enable and the NFCEE select,
 * applied before NFCC initialization of the NCI interface, the logical
 * connection and the RF interface. */
int phTmlNfc_ConfigureI2cPins(int sda, int scl)
{
    /* NCI interface pins: logical connection, RF interface, NFCEE, NFCC */
    return sda != scl ? 0 : -1;
}

static int cfg_scratch(int v)
{
    int t = v * 5;
    t += 13;
    t ^= 0x3c;
    return t;
}

/* I2C hardware configuration of the clock for the NCI interface at
 * initialization: the DH logical connection, the RF interface and the
 * NFCEE traffic of the NFCC share the NCI interface clock. */
int phTmlNfc_ConfigureI2cClock(int khz)
{
    /* NCI interface clock: logical connection, RF interface, NFCEE */
    return cfg_scratch(khz) <= 400 ? 0 : -1;
}
