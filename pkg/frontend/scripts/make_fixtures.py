"""Regenerate the shared golden fixtures in fixtures/.

Inputs are written with the standard library only, so the fixtures do not
depend on the core package's internals; expected outputs come from the
famdiff CLI. Run from the frontend directory:

    python3 scripts/make_fixtures.py
"""

import pathlib
import random
import struct
import subprocess

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"
MAGIC = b"FAMLAT1\x00"


def write_latent(path, channels, height, width, values):
    assert len(values) == channels * height * width
    payload = struct.pack(f"<{len(values)}f", *values)
    header = MAGIC + struct.pack("<III", channels, height, width)
    path.write_bytes(header + payload)


def famdiff(*args):
    subprocess.run(["famdiff", *args], check=True)


def row_stochastic(rng, tokens):
    rows = []
    for _ in range(tokens):
        raw = [rng.uniform(0.05, 1.0) for _ in range(tokens)]
        total = sum(raw)
        rows.extend(v / total for v in raw)
    return rows


def main():
    FIXTURES.mkdir(exist_ok=True)
    rng = random.Random(20240815)

    den = FIXTURES / "fm_den_8x8.lat"
    dif = FIXTURES / "fm_dif_8x8.lat"
    write_latent(den, 1, 8, 8, [rng.gauss(0.0, 1.0) for _ in range(64)])
    write_latent(dif, 1, 8, 8, [rng.gauss(0.0, 1.0) for _ in range(64)])
    famdiff("kernel", "fm-mix", "--z-denoised", str(den), "--z-diffused", str(dif),
            "--t", "500", "--T", "1000", "--out", str(FIXTURES / "fm_mix_t500.lat"))
    famdiff("kernel", "fm-mix-conv", "--z-denoised", str(den), "--z-diffused", str(dif),
            "--t", "500", "--T", "1000", "--out", str(FIXTURES / "fm_mix_conv_t500.lat"))

    famdiff("kernel", "make-filter", "--size", "8x8", "--t", "500", "--T", "1000",
            "--out", str(FIXTURES / "filter_8x8_t500.lat"))

    native = FIXTURES / "attn_native_4x4.lat"
    high = FIXTURES / "attn_high_8x8.lat"
    write_latent(native, 1, 16, 16, row_stochastic(rng, 16))
    write_latent(high, 1, 64, 64, row_stochastic(rng, 64))
    famdiff("kernel", "upsample-attn", "--matrix", str(native), "--spatial", "4x4",
            "--scale", "2", "--out", str(FIXTURES / "attn_up_s2.lat"))
    famdiff("kernel", "modulate-attn", "--native", str(native), "--high", str(high),
            "--spatial", "4x4", "--scale", "2", "--lambda", "0.7",
            "--out", str(FIXTURES / "attn_mod_l07.lat"))
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
