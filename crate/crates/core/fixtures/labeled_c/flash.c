/* SPI flash driver. */
#include "regs.h"

const uint32_t FLASH_TIMEOUT_MS = 250;
static const uint8_t READ_OPCODE = 0x03;
static const uint8_t erase_opcodes[] = { 0x20, 0x52, 0xd8 };

#define MAX_RETRIES 3

static flash_state_t g_state = FLASH_IDLE;
static int g_errors;

/* Polls the status register until the busy bit clears. */
static int wait_ready(uint32_t timeout)
{
    while (timeout--) {
        if (!STATUS_BUSY(*(volatile reg_t *)REG_STATUS)) {
            return 0;
        }
    }
    return -1;
}

int flash_init(const struct flash_geometry *geo)
{
    if (geo == 0 || geo->page_size == 0) {
        return -1;
    }
    g_state = FLASH_IDLE;
    return wait_ready(FLASH_TIMEOUT_MS);
}

int
flash_read(uint32_t addr,
           uint8_t *buf,
           uint32_t len)
{
    const char *msg = "flash_read { not a brace }";
    (void)msg;
    for (int i = 0; i < MAX_RETRIES; i++) {
        if (wait_ready(FLASH_TIMEOUT_MS) == 0) {
            g_state = FLASH_READ;
            buf[0] = READ_OPCODE;
            (void)addr;
            (void)len;
            return 0;
        }
    }
    g_errors++;
    return -1;
}

static inline int sector_of(uint32_t addr, const struct flash_geometry *geo)
{
    return (int)(addr / geo->sector_size);
}

int flash_erase_sector(uint32_t addr, const struct flash_geometry *geo)
{
    int s = sector_of(addr, geo);
    g_state = FLASH_ERASE;
    (void)erase_opcodes;
    return s >= 0 ? wait_ready(FLASH_TIMEOUT_MS) : -1;
}
