#!/usr/bin/env python3
"""Regenerates templates.txt from hand-placed through-points.

Each stroke is a Catmull-Rom spline through the points, written out as a
C1 cubic Bezier chain. Closed strokes repeat their first point at the end.
"""

import math
import sys

LATIN = {
    "a": [[(.75, .50), (.50, .62), (.27, .45), (.30, .20), (.55, .15), (.74, .35), (.76, .62), (.78, .20), (.86, .12)]],
    "b": [[(.30, .88), (.30, .50), (.30, .14), (.32, .32), (.50, .48), (.70, .35), (.65, .16), (.36, .16)]],
    "c": [[(.75, .55), (.50, .62), (.28, .45), (.30, .20), (.55, .12), (.75, .25)]],
    "d": [[(.70, .45), (.50, .60), (.28, .40), (.35, .15), (.60, .15), (.70, .35), (.70, .88), (.71, .12)]],
    "e": [[(.30, .38), (.72, .42), (.60, .60), (.35, .58), (.25, .35), (.40, .14), (.72, .20)]],
    "l": [[(.40, .50), (.62, .75), (.52, .88), (.42, .70), (.45, .20), (.62, .12)]],
    "n": [[(.30, .60), (.30, .12), (.32, .40), (.50, .60), (.68, .45), (.70, .12)]],
    "o": [[(.50, .62), (.28, .45), (.30, .20), (.55, .13), (.73, .30), (.70, .52), (.50, .62)]],
    "s": [[(.72, .55), (.50, .62), (.30, .50), (.50, .38), (.70, .25), (.50, .12), (.28, .20)]],
    "t": [[(.45, .85), (.45, .40), (.50, .15), (.66, .16)], [(.28, .62), (.66, .62)]],
    "x": [[(.28, .62), (.50, .37), (.74, .12)], [(.72, .62), (.50, .37), (.26, .12)]],
    "z": [[(.28, .60), (.72, .60), (.28, .12), (.74, .12)]],
}

GEORGIAN = {
    "ა": [[(.20, .40), (.35, .60), (.50, .40), (.40, .20), (.55, .12), (.75, .30), (.70, .55)]],
    "ბ": [[(.55, .85), (.35, .80), (.40, .60), (.60, .50), (.70, .30), (.50, .13), (.30, .25), (.40, .45)]],
    "გ": [[(.30, .55), (.50, .62), (.68, .45), (.60, .20), (.40, .13), (.30, .30)]],
    "დ": [[(.30, .40), (.45, .60), (.60, .45), (.50, .30), (.62, .18), (.78, .30), (.75, .75), (.55, .88)]],
    "ე": [[(.65, .88), (.40, .85), (.35, .60), (.55, .50), (.40, .40), (.30, .20), (.55, .13), (.72, .30), (.50, .40)]],
    "ვ": [[(.25, .50), (.35, .62), (.45, .40), (.55, .60), (.72, .45), (.62, .15), (.40, .13)]],
    "ზ": [[(.30, .55), (.55, .62), (.55, .45), (.40, .38), (.65, .30), (.60, .13), (.35, .15)]],
    "თ": [[(.25, .35), (.30, .60), (.45, .45), (.50, .20), (.55, .45), (.70, .60), (.78, .35), (.65, .12)]],
    "ი": [[(.30, .55), (.30, .22), (.50, .13), (.70, .25), (.70, .60)]],
    "ლ": [[(.20, .30), (.30, .60), (.40, .30), (.50, .60), (.60, .30), (.70, .60), (.80, .35)]],
}


def bezier_chain(pts):
    closed = pts[0] == pts[-1] and len(pts) > 3
    n = len(pts)

    def at(i):
        if closed:
            return pts[i % (n - 1)]
        return pts[min(max(i, 0), n - 1)]

    out = [pts[0]]
    for i in range(n - 1):
        p0, p1, p2, p3 = at(i - 1), at(i), at(i + 1), at(i + 2)
        c1 = (p1[0] + (p2[0] - p0[0]) / 6, p1[1] + (p2[1] - p0[1]) / 6)
        c2 = (p2[0] - (p3[0] - p1[0]) / 6, p2[1] - (p3[1] - p1[1]) / 6)
        out += [c1, c2, p2]
    for x, y in out:
        assert 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0, (x, y)
    return out


def length(pts):
    return sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))


def emit(glyphs, alphabet, out):
    for ch, strokes in glyphs.items():
        total = sum(length(s) for s in strokes)
        duration = int(round((300 + 180 * total) / 10) * 10)
        out.append(f"glyph {ch} {alphabet} {duration}")
        for s in strokes:
            coords = " ".join(f"{v:.4f}" for p in bezier_chain(s) for v in p)
            out.append(f"stroke {coords}")
        out.append("")


def main():
    out = ["# Glyph templates: cubic Bezier chains in the unit box, y up.",
           "# Regenerate with make_templates.py.", ""]
    emit(LATIN, "latin", out)
    emit(GEORGIAN, "georgian", out)
    sys.stdout.write("\n".join(out))


if __name__ == "__main__":
    main()
