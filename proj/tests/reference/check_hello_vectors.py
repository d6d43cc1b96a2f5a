"""Cross-check the frozen TLS hello vectors with scapy's TLS dissector.

Exit 0 when every vector dissects to the expected versions, 1 on mismatch,
77 (skip) when scapy is not installed.
"""
import pathlib
import sys

try:
    from scapy.layers.tls.record import TLS
    from scapy.layers.tls.handshake import TLSClientHello, TLSServerHello
    from scapy.layers.tls.extensions import TLS_Ext_SupportedVersion_CH, TLS_Ext_SupportedVersion_SH
except ImportError:
    print("scapy not available")
    sys.exit(77)


def load(path):
    vectors = {}
    for line in pathlib.Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, hexdata = line.split()
        vectors[name] = bytes.fromhex(hexdata)
    return vectors


def hello(data, cls):
    record = TLS(data)
    msgs = [m for m in record.msg if isinstance(m, cls)]
    if len(msgs) != 1:
        raise AssertionError(f"expected one {cls.__name__}, got {record.msg!r}")
    return msgs[0]


def main():
    vectors = load(pathlib.Path(__file__).with_name("hello_vectors.txt"))
    failures = []

    ch = hello(vectors["client_hello"], TLSClientHello)
    offered = [e for e in (ch.ext or []) if isinstance(e, TLS_Ext_SupportedVersion_CH)]
    if ch.version != 0x0303 or not offered or list(offered[0].versions) != [0x0304, 0x0303]:
        failures.append("client_hello: expected legacy 0x0303 offering [0x0304, 0x0303]")

    sh13 = hello(vectors["server_hello_13"], TLSServerHello)
    selected = [e for e in (sh13.ext or []) if isinstance(e, TLS_Ext_SupportedVersion_SH)]
    if sh13.version != 0x0303 or len(selected) != 1 or selected[0].version != 0x0304:
        failures.append("server_hello_13: expected legacy 0x0303 selecting 0x0304")

    sh12 = hello(vectors["server_hello_12"], TLSServerHello)
    if sh12.version != 0x0303 or any(isinstance(e, TLS_Ext_SupportedVersion_SH) for e in (sh12.ext or [])):
        failures.append("server_hello_12: expected legacy 0x0303 and no supported_versions")
    if bytes(sh12.random_bytes) != bytes(sh13.random_bytes) or sh12.sid != sh13.sid:
        failures.append("server_hello_12 must differ from server_hello_13 only by the extension")

    for f in failures:
        print("FAIL", f)
    if not failures:
        print("PASS reference dissector agrees with all hello vectors")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
