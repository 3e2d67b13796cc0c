# -*- coding: utf-8 -*-
__copyright__ = "Copyright (c) 2026 splat-camo contributors"

# Little-endian field codecs for the splat-cloud container. Every unpack_*
# returns (value, remaining_buffer); pass a memoryview so slicing stays
# zero-copy on large clouds.

import struct


def pack_uint16(x):
    return struct.pack('<H', int(x))


def unpack_uint16(buffer):
    data_length = struct.calcsize('<H')
    return struct.unpack('<H', buffer[:data_length])[0], buffer[data_length:]


def pack_uint32(x):
    return struct.pack('<I', int(x))


def unpack_uint32(buffer):
    data_length = struct.calcsize('<I')
    return struct.unpack('<I', buffer[:data_length])[0], buffer[data_length:]


def pack_magic(magic):
    if isinstance(magic, str):
        magic = magic.encode('ascii')
    return struct.pack('<4s', magic)


def unpack_magic(buffer):
    data_length = struct.calcsize('<4s')
    return struct.unpack('<4s', buffer[:data_length])[0], buffer[data_length:]


def pack_float64_array(values):
    values = [float(v) for v in values]
    return struct.pack('<{}d'.format(len(values)), *values)


def unpack_float64_array(buffer, count):
    data_length = struct.calcsize('<{}d'.format(count))
    return list(struct.unpack('<{}d'.format(count), buffer[:data_length])), buffer[data_length:]


def float64_array_size(count):
    return struct.calcsize('<{}d'.format(count))
