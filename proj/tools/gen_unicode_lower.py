#!/usr/bin/env python3
"""Regenerates core/src/unicode_lower_table.inc from Python's str.lower().

Only single-code-point mappings are emitted; U+0130 (the one multi-code-point
lowercase mapping) is handled in code.
"""
import sys
import unicodedata

mappings = []
for cp in range(0x110000):
    if 0xD800 <= cp <= 0xDFFF:
        continue
    c = chr(cp)
    low = c.lower()
    if len(low) == 1 and low != c:
        mappings.append((cp, ord(low) - cp))

# Collapse into runs of (first, last, stride, delta).
runs = []
for cp, delta in mappings:
    if runs:
        first, last, stride, d = runs[-1]
        if d == delta and (stride == 0 or cp - last == stride) and (stride != 0 or cp - last in (1, 2)):
            runs[-1] = (first, cp, cp - last if stride == 0 else stride, d)
            continue
    runs.append((cp, cp, 0, delta))

out = sys.stdout
out.write(f"// Generated by tools/gen_unicode_lower.py (Unicode {unicodedata.unidata_version}). Do not edit.\n")
out.write("// {first, last, stride, delta}\n")
for first, last, stride, delta in runs:
    out.write(f"{{0x{first:05X}, 0x{last:05X}, {max(stride, 1)}, {delta}}},\n")
