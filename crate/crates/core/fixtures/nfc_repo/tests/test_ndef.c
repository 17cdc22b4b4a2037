/* Regression cases. */
#include "harness.h"

/* NDEF records: the parser must reject records whose payload length
 * exceeds the message length; NDEF message sequence of records. */
void test_ndef_reject_payload_length(void)
{
    static const char *vectors[] = {
        "ndef records payload length message",
        "parser reject records whose payload",
        "ndef message length payload length",
        "reject ndef records payload length",
        "ndef parser records message",
        "payload length records ndef",
    };
    run_vectors(vectors, 6);
}

static int fixture_0_setup(int seed)
{
    int acc = seed;
    acc = acc * 31 + 7;
    acc ^= acc >> 3;
    return acc & 0xff;
}

/* NDEF message: a sequence of records with type name format and payload;
 * parser of NDEF records type name format. */
void test_ndef_sequence_of_records(void)
{
    static const char *vectors[] = {
        "ndef message sequence of records",
        "type name format payload records",
        "ndef records type name format",
        "sequence records ndef message parser",
        "type name format ndef parser",
        "records sequence payload ndef",
    };
    run_vectors(vectors, 6);
}

static int fixture_1_setup(int seed)
{
    int acc = seed;
    acc = acc * 31 + 7;
    acc ^= acc >> 3;
    return acc & 0xff;
}

/* NDEF short records: payload length of records; parser of NDEF message
 * records whose type name format and payload length are checked. */
void test_ndef_short_records(void)
{
    static const char *vectors[] = {
        "ndef short records payload length",
        "records whose payload length ndef",
        "parser ndef message records",
        "type name format short records",
        "ndef payload length parser",
        "short records ndef message",
    };
    run_vectors(vectors, 6);
}
