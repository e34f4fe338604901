#!/usr/bin/env python3
"""Contour and band extraction, step by step.

A segmentation boundary is isolated by eroding the mask and XOR-ing the
result against the original: the voxels that erosion removed are exactly
the boundary layer. An offset band around the boundary comes from XOR-ing
a dilation against an erosion. This script walks both pipelines on a tiny
slice so every intermediate mask can be printed.
"""

import numpy as np

from contourdice import (
    BandSpec,
    BinaryMask,
    ContourSpec,
    count_true,
    dilate,
    erode,
    extract_band,
    extract_contour,
    xor,
)


def show(title, mask):
    print(f"{title}  ({count_true(mask)} px)")
    plane = mask.bits[:, :, 0]
    for row in plane.T:
        print("   " + "".join("#" if v else "." for v in row))
    print()


def main():
    bits = np.zeros((11, 11, 1), bool)
    bits[3:8, 3:8, 0] = True
    m = BinaryMask.from_array(bits)
    show("input: a 5x5 square", m)

    eroded = erode(m)
    show("eroded once (3x3 kernel, outside counts as background)", eroded)

    contour = xor(m, eroded)
    show("contour = mask XOR eroded", contour)
    assert np.array_equal(contour.bits, extract_contour(m).bits)

    wide = extract_contour(m, ContourSpec(erosion_iterations=2))
    show("two erosions give a 2-px-wide contour", wide)

    dilated = dilate(m)
    show("dilated once", dilated)

    band = extract_band(m, BandSpec(dilate_iterations=1, erode_iterations=1))
    show("band = dilated XOR eroded (2 px straddling the surface)", band)

    fat = extract_band(m, BandSpec(dilate_iterations=2, erode_iterations=2))
    show("wider band with 2 dilations / 2 erosions", fat)

    print("the band always covers the contour:",
          not (contour.bits & ~band.bits).any())


if __name__ == "__main__":
    main()
