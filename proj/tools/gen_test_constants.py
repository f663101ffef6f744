#!/usr/bin/env python3
# Regenerates the frozen numeric constants used in the C++ test suites.
# Everything here is computed with mpmath at 40 digits, independently of the
# library implementation, then printed as round-trip double literals.
# Run: python3 tools/gen_test_constants.py

import mpmath as mp

mp.mp.dps = 40


def dbl(x):
    return repr(float(x))


print("== softmax log-probs ==")
print("uniform vocab 4, log(1/4)            =", dbl(mp.log(mp.mpf(1) / 4)))
e = mp.e
print("row [1,0,0,0], token 0: log(e/(e+3)) =", dbl(mp.log(e / (e + 3))))
print("row [1,0,0,0], token 1: log(1/(e+3)) =", dbl(mp.log(1 / (e + 3))))

print()
print("== ratio decomposition at logs (-1.0, -1.2, -1.3) ==")
print("r_s = exp(0.2)   =", dbl(mp.exp(mp.mpf("0.2"))))
print("r_d = exp(0.1)   =", dbl(mp.exp(mp.mpf("0.1"))))
print("r_tot = exp(0.3) =", dbl(mp.exp(mp.mpf("0.3"))))

print()
print("== group-normalized advantages, rewards (0,1), guard 1e-6 ==")
mean = mp.mpf("0.5")
std = mp.mpf("0.5")  # population std of {0,1}
guard = mp.mpf("1e-6")
print("|A| = 0.5/(0.5+1e-6) =", dbl(std / (std + guard)))

print()
print("== EWMA ==")
print("scalar seq (0,1), beta=0.5, after 2nd absorb: 2/3 =", dbl(mp.mpf(2) / 3))
print("center of mass beta=0.75: 3.0 exact in doubles")
print("decay W=2 -> 0.5, W=6 -> 0.75 exact in doubles")

print()
print("== masked-weight hand product ==")
print("1.002 * 1.005 =", dbl(mp.mpf("1.002") * mp.mpf("1.005")))

print()
print("== effective threshold table, 4-decimal rendering ==")
# rows: (mask_eps, clip_lo_eps, clip_hi_eps, n, interp) -> mask/clip intervals
blocks = [
    ("0.010", "0.003", "0.004"),
    ("0.005", "0.003", "0.004"),
    ("0.010", "0.004", "0.006"),
    ("0.020", "0.003", "0.004"),
]
for (m_, cl_, ch_) in blocks:
    m, cl, ch = mp.mpf(m_), mp.mpf(cl_), mp.mpf(ch_)
    for n in (1, 2, 3):
        a = mp.mpf(1) / (n + 1)
        lin_mask = (1 - m / (1 - a), 1 + m / (1 - a))
        lin_clip = (
            a * (1 - cl) / (1 - (1 - a) * (1 - cl)),
            a * (1 + ch) / (1 - (1 - a) * (1 + ch)),
        )
        log_mask = ((1 - m) ** (1 / (1 - a)), (1 + m) ** (1 / (1 - a)))
        log_clip = ((1 - cl) ** (1 / a), (1 + ch) ** (1 / a))
        fmt = lambda iv: "[%s,%s]" % (mp.nstr(iv[0], 5, strip_zeros=False),
                                      mp.nstr(iv[1], 6, strip_zeros=False))
        print(
            f"mask +-{m_} clip [{1-mp.mpf(cl_)},{1+mp.mpf(ch_)}] n={n} "
            f"linear mask={fmt(lin_mask)} clip={fmt(lin_clip)}  "
            f"loglinear mask={fmt(log_mask)} clip={fmt(log_clip)}"
        )

print()
print("== discrepancy ratio envelope, magnitude 0.01 ==")
print("exp(+0.02) =", dbl(mp.exp(mp.mpf("0.02"))))
print("exp(-0.02) =", dbl(mp.exp(mp.mpf("-0.02"))))
