/* CRC-16 used by framing checks. */
#include <stdint.h>

static const uint16_t CRC_POLY = 0x8408;

/* Bitwise CRC over a buffer. */
uint16_t crc16(const uint8_t *buf, int len)
{
    uint16_t crc = 0xFFFF;
    for (int i = 0; i < len; i++) {
        crc ^= buf[i];
        for (int b = 0; b < 8; b++) {
            crc = (crc & 1) ? (crc >> 1) ^ CRC_POLY : crc >> 1;
        }
    }
    return crc;
}
