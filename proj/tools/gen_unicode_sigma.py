#!/usr/bin/env python3
"""Regenerates the final-sigma context tables used by text::to_lower.

str.lower() maps U+03A3 to final sigma when it follows a cased letter (skipping
case-ignorable code points) and no cased letter follows. Python does not expose
the Cased and Case_Ignorable properties, so they are probed through str.lower():
  "A" + c + SIGMA ends in final sigma  <=> c is case-ignorable or cased
  c + SIGMA ends in final sigma        <=> c is cased and not case-ignorable

    python3 gen_unicode_sigma.py core/src
"""
import sys
import unicodedata
from pathlib import Path

SIGMA = "Σ"
FINAL = "ς"


def ranges(cps):
    out = []
    for cp in cps:
        if out and out[-1][1] == cp - 1:
            out[-1][1] = cp
        else:
            out.append([cp, cp])
    return out


def main():
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
    ignorable, cased = [], []
    for cp in range(0x110000):
        if 0xD800 <= cp <= 0xDFFF:
            continue
        c = chr(cp)
        alone = (c + SIGMA).lower().endswith(FINAL)
        after_cased = ("A" + c + SIGMA).lower().endswith(FINAL)
        if alone:
            cased.append(cp)
        elif after_cased:
            ignorable.append(cp)
    header = f"// Generated by tools/gen_unicode_sigma.py (Unicode {unicodedata.unidata_version}). Do not edit.\n"
    for name, cps in (("unicode_case_ignorable.inc", ignorable), ("unicode_cased.inc", cased)):
        with open(out_dir / name, "w") as f:
            f.write(header + "// {first, last}\n")
            for a, b in ranges(cps):
                f.write(f"{{0x{a:05X}, 0x{b:05X}}},\n")


if __name__ == "__main__":
    main()
