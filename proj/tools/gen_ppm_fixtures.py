#!/usr/bin/env python3
"""Writes fixtures/ppm_a.json and fixtures/ppm_b.json.

Fifty common apps. Ten carry the per-app packet rates of the comparison
table, com.chess carries the 1000 -> 7530 pair, and 39 filler apps bring the
per-dataset mean to 21288 (A) and 4019 (B). Every capture lasts 60 s, so a
capture's packet count equals its packets-per-minute.
"""

import json
import pathlib

TABLE = {
    # app: (ppm_b, ppm_a)
    "app.sachnoi": (2278, 5626),
    "com.facebook.katana": (20310, 6385),
    "com.instagram.android": (8081, 10547),
    "com.reddit.frontpage": (4047, 18142),
    "com.skype.raider": (1588, 71584),
    "com.soundcloud.android": (7988, 3424),
    "com.spotify.music": (2248, 2443),
    "fm.castbox.audiobook.radio.podcast": (3166, 14728),
    "myradio.radio.fmradio.liveradio.radiostation": (3583, 24067),
    "vn.vtv.vtvgo": (4516, 50444),
}
CHESS = ("com.chess", 7530, 1000)

FILLERS = [
    "bbc.mobile.news.ww", "com.azarlive.android", "com.bachtruyen", "com.baohay24h.app",
    "com.chotot.vn", "com.cnn.mobile.android.phone", "com.craftbox.jwapp.android", "com.dts.freefireth",
    "com.facebook.orca", "com.fplay.activity", "com.giaitri.tvviet", "com.google.android.apps.meetings",
    "com.guardian", "com.hahalolo.android.social", "com.huya.nimo", "com.imbb.oversea.android",
    "com.innersloth.spacemafia", "com.iqiyi.i18n", "com.kaka.kakavideo", "com.lazada.android",
    "com.linkedin.android", "com.mobilemotion.dubsmash", "com.netflix.mediaclient", "com.nono.android",
    "com.pinterest", "com.popsworldwide.popskids", "com.quora.android", "com.sendo",
    "com.sgiggle.production", "com.shopee.vn", "com.snapchat.android", "com.ss.android.ugc.trill",
    "com.starmakerinteractive.starmaker", "com.ted.android", "com.tinder", "com.twitter.android",
    "com.zing.zalo", "org.telegram.messenger", "wsj.reader_sp",
]

APP_COUNT = 50
MEAN_A = 21288
MEAN_B = 4019
DURATION_S = 60
DNS_PACKETS = 10


def spread(total, n, salt):
    """n positive integers with the exact given sum and a deterministic spread."""
    weights = [0.4 + ((i * 7 + salt) % 13) / 10.0 for i in range(n)]
    scale = total / sum(weights)
    values = [max(40, round(w * scale)) for w in weights]
    values[-1] += total - sum(values)
    assert values[-1] >= 40
    return values


def capture(ppm, quic):
    dns = DNS_PACKETS
    flows = [{"protocol_profile": "Do53", "app_data_packets": dns, "start_offset_s": 0.5, "rate_pps": 2}]
    rest = ppm - dns
    if quic:
        q = rest // 4
        flows.append({"protocol_profile": "QuicV1", "app_data_packets": q - 2,
                      "start_offset_s": 1.0, "rate_pps": max(1.0, q / 50.0)})
        rest -= q
    flows.append({"protocol_profile": "Tls13", "app_data_packets": rest - 2,
                  "start_offset_s": 1.5, "rate_pps": max(1.0, rest / 50.0)})
    return {"duration_s": DURATION_S, "flows": flows}


def app_captures(ppm, quic):
    # Two captures around the target rate exercise the per-app mean.
    if ppm >= 400:
        return [capture(ppm - 100, quic), capture(ppm + 100, quic)]
    return [capture(ppm, quic)]


def build(which):
    index = 0 if which == "b" else 1
    rates = {app: pair[index] for app, pair in TABLE.items()}
    rates[CHESS[0]] = CHESS[1] if which == "b" else CHESS[2]
    mean = MEAN_B if which == "b" else MEAN_A
    remaining = mean * APP_COUNT - sum(rates.values())
    for app, ppm in zip(FILLERS, spread(remaining, len(FILLERS), 3 if which == "b" else 5)):
        rates[app] = ppm
    assert len(rates) == APP_COUNT
    assert sum(rates.values()) == mean * APP_COUNT
    apps = [{"app_name": app, "captures": app_captures(ppm, quic=(which == "b"))}
            for app, ppm in sorted(rates.items())]
    return {"seed": 53 if which == "b" else 21, "apps": apps}


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
    for which in ("a", "b"):
        path = out / f"ppm_{which}.json"
        path.write_text(json.dumps(build(which), indent=1) + "\n")
        print(path)


if __name__ == "__main__":
    main()
