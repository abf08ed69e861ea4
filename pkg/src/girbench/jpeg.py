"""Baseline JPEG encoder/decoder (JFIF, sequential DCT, Huffman).

The encoder produces 4:2:0 streams with the classic reference quantization and
Huffman tables; the decoder accepts 4:2:0 and 4:4:4 streams. Intermediate math
runs in float64; the orthonormal 8x8 DCT matches the JPEG normalization.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

from .errors import CorruptStream, InvalidParam, UnsupportedFormat
from .imaging import ImageF32, as_image, clamp01, rgb_to_ycbcr, ycbcr_to_rgb

# Reference quantization tables, stored in zigzag scan order.
_QUANT_LUMA_ZZ = (
    16, 11, 12, 14, 12, 10, 16, 14, 13, 14, 18, 17, 16, 19, 24, 40,
    26, 24, 22, 22, 24, 49, 35, 37, 29, 40, 58, 51, 61, 60, 57, 51,
    56, 55, 64, 72, 92, 78, 64, 68, 87, 69, 55, 56, 80, 109, 81, 87,
    95, 98, 103, 104, 103, 62, 77, 113, 121, 112, 100, 120, 92, 101, 103, 99,
)
_QUANT_CHROMA_ZZ = (
    17, 18, 18, 24, 21, 24, 47, 26, 26, 47, 99, 66, 56, 66, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
)

# Reference Huffman table specs: (BITS counts per code length 1..16, values).
_DC_LUMA = (
    (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0),
    tuple(range(12)),
)
_DC_CHROMA = (
    (0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0),
    tuple(range(12)),
)
_AC_LUMA = (
    (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 125),
    (
        1, 2, 3, 0, 4, 17, 5, 18, 33, 49, 65, 6, 19, 81, 97, 7,
        34, 113, 20, 50, 129, 145, 161, 8, 35, 66, 177, 193, 21, 82, 209, 240,
        36, 51, 98, 114, 130, 9, 10, 22, 23, 24, 25, 26, 37, 38, 39, 40,
        41, 42, 52, 53, 54, 55, 56, 57, 58, 67, 68, 69, 70, 71, 72, 73,
        74, 83, 84, 85, 86, 87, 88, 89, 90, 99, 100, 101, 102, 103, 104, 105,
        106, 115, 116, 117, 118, 119, 120, 121, 122, 131, 132, 133, 134, 135, 136, 137,
        138, 146, 147, 148, 149, 150, 151, 152, 153, 154, 162, 163, 164, 165, 166, 167,
        168, 169, 170, 178, 179, 180, 181, 182, 183, 184, 185, 186, 194, 195, 196, 197,
        198, 199, 200, 201, 202, 210, 211, 212, 213, 214, 215, 216, 217, 218, 225, 226,
        227, 228, 229, 230, 231, 232, 233, 234, 241, 242, 243, 244, 245, 246, 247, 248,
        249, 250,
    ),
)
_AC_CHROMA = (
    (0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 119),
    (
        0, 1, 2, 3, 17, 4, 5, 33, 49, 6, 18, 65, 81, 7, 97, 113,
        19, 34, 50, 129, 8, 20, 66, 145, 161, 177, 193, 9, 35, 51, 82, 240,
        21, 98, 114, 209, 10, 22, 36, 52, 225, 37, 241, 23, 24, 25, 26, 38,
        39, 40, 41, 42, 53, 54, 55, 56, 57, 58, 67, 68, 69, 70, 71, 72,
        73, 74, 83, 84, 85, 86, 87, 88, 89, 90, 99, 100, 101, 102, 103, 104,
        105, 106, 115, 116, 117, 118, 119, 120, 121, 122, 130, 131, 132, 133, 134, 135,
        136, 137, 138, 146, 147, 148, 149, 150, 151, 152, 153, 154, 162, 163, 164, 165,
        166, 167, 168, 169, 170, 178, 179, 180, 181, 182, 183, 184, 185, 186, 194, 195,
        196, 197, 198, 199, 200, 201, 202, 210, 211, 212, 213, 214, 215, 216, 217, 218,
        226, 227, 228, 229, 230, 231, 232, 233, 234, 242, 243, 244, 245, 246, 247, 248,
        249, 250,
    ),
)

# Zigzag scan: _ZIGZAG[i] is the raster index of the i-th scanned coefficient.
_ZIGZAG = np.array(
    [
        0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5,
        12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28,
        35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
        58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
    ]
)
_UNZIGZAG = np.argsort(_ZIGZAG)


def quant_tables(quality: int):
    """Quality-scaled (luma, chroma) quantization tables, zigzag order."""
    if not isinstance(quality, (int, np.integer)) or not 1 <= quality <= 100:
        raise InvalidParam(f"quality must be an integer in [1, 100], got {quality!r}")
    s = 5000 // quality if quality < 50 else 200 - 2 * quality
    out = []
    for base in (_QUANT_LUMA_ZZ, _QUANT_CHROMA_ZZ):
        t = (np.asarray(base, dtype=np.int64) * s + 50) // 100
        out.append(np.clip(t, 1, 255).astype(np.int64))
    return out[0], out[1]


def _build_codes(bits, vals):
    """Canonical Huffman assignment: value -> (code, length)."""
    table = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            table[vals[k]] = (code, length)
            code += 1
            k += 1
        code <<= 1
    return table


_ENC_DC = (_build_codes(*_DC_LUMA), _build_codes(*_DC_CHROMA))
_ENC_AC = (_build_codes(*_AC_LUMA), _build_codes(*_AC_CHROMA))


class _BitWriter:
    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.nbits = 0

    def write(self, code: int, length: int):
        self.acc = (self.acc << length) | code
        self.nbits += length
        while self.nbits >= 8:
            self.nbits -= 8
            byte = (self.acc >> self.nbits) & 0xFF
            self.out.append(byte)
            if byte == 0xFF:
                self.out.append(0x00)
        self.acc &= (1 << self.nbits) - 1

    def flush(self):
        if self.nbits:
            pad = 8 - self.nbits
            self.write((1 << pad) - 1, pad)


def _magnitude(v: int):
    """(category, extra-bits value) for a DC difference or AC coefficient."""
    s = int(abs(v)).bit_length()
    if v < 0:
        return s, v + (1 << s) - 1
    return s, v


def _plane_blocks(plane: np.ndarray, qtable_zz: np.ndarray) -> np.ndarray:
    """Quantized zigzag coefficients, shape (bh, bw, 64), int32."""
    h, w = plane.shape
    blocks = plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3) - 128.0
    coef = dctn(blocks, type=2, norm="ortho", axes=(2, 3))
    coef = coef.reshape(h // 8, w // 8, 64)[:, :, _ZIGZAG]
    return np.round(coef / qtable_zz).astype(np.int32)


def _encode_block(bw: _BitWriter, zz, pred_dc: int, chroma: bool) -> int:
    dc_codes, ac_codes = _ENC_DC[chroma], _ENC_AC[chroma]
    dc = int(zz[0])
    s, extra = _magnitude(dc - pred_dc)
    code, length = dc_codes[s]
    bw.write(code, length)
    if s:
        bw.write(extra, s)
    run = 0
    last = 0
    for k in range(1, 64):
        if zz[k]:
            last = k
    for k in range(1, last + 1):
        v = int(zz[k])
        if v == 0:
            run += 1
            continue
        while run > 15:
            code, length = ac_codes[0xF0]  # ZRL
            bw.write(code, length)
            run -= 16
        s, extra = _magnitude(v)
        code, length = ac_codes[(run << 4) | s]
        bw.write(code, length)
        bw.write(extra, s)
        run = 0
    if last != 63:
        code, length = ac_codes[0x00]  # EOB
        bw.write(code, length)
    return dc


def _marker_segment(marker: int, payload: bytes) -> bytes:
    return bytes([0xFF, marker]) + (len(payload) + 2).to_bytes(2, "big") + payload


def encode_jpeg(img: ImageF32, quality: int) -> bytes:
    img = as_image(img)
    ql, qc = quant_tables(quality)
    h, w = img.shape[:2]

    ycc = rgb_to_ycbcr(img).astype(np.float64) * 255.0
    pad_h, pad_w = -h % 16, -w % 16
    ycc = np.pad(ycc, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")
    y = ycc[:, :, 0]
    hh, ww = ycc.shape[:2]
    # 4:2:0 chroma: plain 2x2 box average
    cb = ycc[:, :, 1].reshape(hh // 2, 2, ww // 2, 2).mean(axis=(1, 3))
    cr = ycc[:, :, 2].reshape(hh // 2, 2, ww // 2, 2).mean(axis=(1, 3))

    by = _plane_blocks(y, ql)
    bcb = _plane_blocks(cb, qc)
    bcr = _plane_blocks(cr, qc)

    bw = _BitWriter()
    pred = [0, 0, 0]
    for my in range(hh // 16):
        for mx in range(ww // 16):
            for dy in (0, 1):
                for dx in (0, 1):
                    pred[0] = _encode_block(bw, by[2 * my + dy, 2 * mx + dx], pred[0], False)
            pred[1] = _encode_block(bw, bcb[my, mx], pred[1], True)
            pred[2] = _encode_block(bw, bcr[my, mx], pred[2], True)
    bw.flush()

    parts = [b"\xff\xd8"]  # SOI
    parts.append(_marker_segment(0xE0, b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00"))
    parts.append(_marker_segment(0xDB, b"\x00" + bytes(int(v) for v in ql)))
    parts.append(_marker_segment(0xDB, b"\x01" + bytes(int(v) for v in qc)))
    sof = b"\x08" + h.to_bytes(2, "big") + w.to_bytes(2, "big") + b"\x03"
    sof += b"\x01\x22\x00" + b"\x02\x11\x01" + b"\x03\x11\x01"
    parts.append(_marker_segment(0xC0, sof))
    for (cls, tid), (bits, vals) in (
        ((0, 0), _DC_LUMA), ((1, 0), _AC_LUMA), ((0, 1), _DC_CHROMA), ((1, 1), _AC_CHROMA)
    ):
        parts.append(_marker_segment(0xC4, bytes([(cls << 4) | tid]) + bytes(bits) + bytes(vals)))
    parts.append(_marker_segment(0xDA, b"\x03\x01\x00\x02\x11\x03\x11\x00\x3f\x00"))
    parts.append(bytes(bw.out))
    parts.append(b"\xff\xd9")  # EOI
    return b"".join(parts)


# ----------------------------------------------------------------------------
# Decoder


class _BitReader:
    """Entropy-coded segment reader that unstuffs 0xFF 0x00 pairs."""

    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos
        self.acc = 0
        self.nbits = 0

    def read_bit(self) -> int:
        if self.nbits == 0:
            if self.pos >= len(self.data):
                raise CorruptStream("entropy stream ended prematurely")
            byte = self.data[self.pos]
            self.pos += 1
            if byte == 0xFF:
                if self.pos >= len(self.data):
                    raise CorruptStream("dangling 0xFF at end of entropy stream")
                nxt = self.data[self.pos]
                if nxt == 0x00:
                    self.pos += 1
                else:
                    raise CorruptStream(f"unexpected marker 0xFF{nxt:02X} inside scan")
            self.acc = byte
            self.nbits = 8
        self.nbits -= 1
        return (self.acc >> self.nbits) & 1

    def read_bits(self, n: int) -> int:
        v = 0
        for _ in range(n):
            v = (v << 1) | self.read_bit()
        return v


def _build_decode(bits, vals):
    dec = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            dec[(length, code)] = vals[k]
            code += 1
            k += 1
        code <<= 1
    return dec


def _read_code(br: _BitReader, dec) -> int:
    code = 0
    for length in range(1, 17):
        code = (code << 1) | br.read_bit()
        v = dec.get((length, code))
        if v is not None:
            return v
    raise CorruptStream("invalid Huffman code in scan")


def _extend(v: int, s: int) -> int:
    return v if v >= (1 << (s - 1)) else v - (1 << s) + 1


def _decode_block(br: _BitReader, dc_dec, ac_dec, pred: int):
    zz = np.zeros(64, dtype=np.float64)
    s = _read_code(br, dc_dec)
    diff = _extend(br.read_bits(s), s) if s else 0
    dc = pred + diff
    zz[0] = dc
    k = 1
    while k < 64:
        rs = _read_code(br, ac_dec)
        run, s = rs >> 4, rs & 15
        if s == 0:
            if run == 15:
                k += 16
                continue
            break  # EOB
        k += run
        if k > 63:
            raise CorruptStream("AC run overflows block")
        zz[k] = _extend(br.read_bits(s), s)
        k += 1
    return zz, dc


def decode_jpeg(data: bytes) -> ImageF32:
    if len(data) < 4 or data[:2] != b"\xff\xd8":
        raise CorruptStream("missing SOI marker")
    pos = 2
    qtables = {}
    dc_dec, ac_dec = {}, {}
    frame = None
    scan_comps = None
    while True:
        if pos + 2 > len(data):
            raise CorruptStream("stream ended before SOS")
        if data[pos] != 0xFF:
            raise CorruptStream(f"expected marker at offset {pos}")
        marker = data[pos + 1]
        pos += 2
        if marker == 0xD8:
            continue
        if marker == 0xD9:
            raise CorruptStream("EOI before any scan data")
        ln = int.from_bytes(data[pos : pos + 2], "big")
        seg = data[pos + 2 : pos + ln]
        if len(seg) != ln - 2:
            raise CorruptStream("truncated marker segment")
        pos += ln
        if marker == 0xDB:
            j = 0
            while j < len(seg):
                pq, tq = seg[j] >> 4, seg[j] & 15
                if pq != 0:
                    raise UnsupportedFormat("16-bit quantization tables not supported")
                qtables[tq] = np.asarray(list(seg[j + 1 : j + 65]), dtype=np.float64)
                j += 65
        elif marker == 0xC4:
            j = 0
            while j < len(seg):
                tc, th = seg[j] >> 4, seg[j] & 15
                bits = list(seg[j + 1 : j + 17])
                nv = sum(bits)
                vals = list(seg[j + 17 : j + 17 + nv])
                (ac_dec if tc else dc_dec)[th] = _build_decode(bits, vals)
                j += 17 + nv
        elif marker == 0xC0:
            prec = seg[0]
            h = int.from_bytes(seg[1:3], "big")
            w = int.from_bytes(seg[3:5], "big")
            nf = seg[5]
            if prec != 8 or nf != 3:
                raise UnsupportedFormat("only 8-bit 3-component baseline frames supported")
            comps = {}
            for c in range(nf):
                cid, hv, tq = seg[6 + 3 * c : 9 + 3 * c]
                comps[cid] = (hv >> 4, hv & 15, tq)
            frame = (h, w, comps)
        elif marker in (0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF):
            raise UnsupportedFormat(f"unsupported frame type SOF{marker & 15}")
        elif marker == 0xDD:
            if int.from_bytes(seg, "big") != 0:
                raise UnsupportedFormat("restart intervals not supported")
        elif marker == 0xDA:
            ns = seg[0]
            scan_comps = [(seg[1 + 2 * c], seg[2 + 2 * c] >> 4, seg[2 + 2 * c] & 15) for c in range(ns)]
            break
        # APPn / COM and other segments are skipped

    if frame is None:
        raise CorruptStream("SOS before SOF")
    h, w, comps = frame
    samp = tuple(comps[cid][:2] for cid, _, _ in scan_comps)
    if samp == ((2, 2), (1, 1), (1, 1)):
        mcu_w, mcu_h = 16, 16
    elif samp == ((1, 1), (1, 1), (1, 1)):
        mcu_w, mcu_h = 8, 8
    else:
        raise UnsupportedFormat(f"unsupported sampling layout {samp}")

    mcus_x = -(-w // mcu_w)
    mcus_y = -(-h // mcu_h)
    planes = []
    for cid, _, _ in scan_comps:
        ch, cv, _ = comps[cid]
        planes.append(np.zeros((mcus_y * cv * 8, mcus_x * ch * 8), dtype=np.float64))

    br = _BitReader(data, pos)
    pred = [0, 0, 0]
    for my in range(mcus_y):
        for mx in range(mcus_x):
            for ci, (cid, td, ta) in enumerate(scan_comps):
                ch, cv, tq = comps[cid]
                if tq not in qtables or td not in dc_dec or ta not in ac_dec:
                    raise CorruptStream("scan references undefined tables")
                for dy in range(cv):
                    for dx in range(ch):
                        zz, pred[ci] = _decode_block(br, dc_dec[td], ac_dec[ta], pred[ci])
                        coef = (zz * qtables[tq])[_UNZIGZAG].reshape(8, 8)
                        block = idctn(coef, type=2, norm="ortho") + 128.0
                        r0 = (my * cv + dy) * 8
                        c0 = (mx * ch + dx) * 8
                        planes[ci][r0 : r0 + 8, c0 : c0 + 8] = block
    # Trailing bytes after the scan (including EOI) are ignored: the entropy
    # stream is self-delimiting once all MCUs have been read.

    full = np.empty((h, w, 3), dtype=np.float64)
    for ci, plane in enumerate(planes):
        ch, cv, _ = comps[scan_comps[ci][0]]
        if (ch, cv) != (2, 2) and mcu_w == 16:
            plane = plane.repeat(2, axis=0).repeat(2, axis=1)
        full[:, :, ci] = plane[:h, :w]
    ycc = clamp01(full / 255.0).astype(np.float32)
    return ycbcr_to_rgb(ycc)
