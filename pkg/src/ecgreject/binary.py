"""Little-endian reading and writing shared by the binary containers."""

__docformat__ = 'google'

from ecgreject.typing import ContainerError

import struct

import numpy

from typing import BinaryIO, Mapping


class BinaryWriter:
    """Appends little-endian fields to a binary stream."""

    def __init__(self, stream: BinaryIO):
        self._stream = stream

    def raw(self, data: bytes) -> None:
        self._stream.write(data)

    def u8(self, value: int) -> None:
        self._stream.write(struct.pack('<B', value))

    def u16(self, value: int) -> None:
        self._stream.write(struct.pack('<H', value))

    def u32(self, value: int) -> None:
        self._stream.write(struct.pack('<I', value))

    def u64(self, value: int) -> None:
        self._stream.write(struct.pack('<Q', value))

    def short_string(self, value: str) -> None:
        """u16 byte length then UTF-8."""
        data = value.encode('utf-8')
        if len(data) > 0xFFFF:
            raise ValueError(f'String of {len(data)} bytes is too long.')
        self.u16(len(data))
        self.raw(data)

    def long_bytes(self, data: bytes) -> None:
        """u64 byte length then the bytes."""
        self.u64(len(data))
        self.raw(data)

    def array(self, values: numpy.ndarray, dtype: str) -> None:
        """Values in row-major order as `dtype` ('<f4' or '<f8')."""
        self.raw(numpy.ascontiguousarray(values, dtype=dtype).tobytes())

    def tensor(self, name: str, values: numpy.ndarray) -> None:
        """Name, rank (u32), dims (u64 each), then float64 values."""
        self.short_string(name)
        self.u32(values.ndim)
        for dim in values.shape:
            self.u64(dim)
        self.array(values, '<f8')

    def tensors(self, named: Mapping[str, numpy.ndarray]) -> None:
        """Tensor count (u64) then each tensor in the mapping's order."""
        self.u64(len(named))
        for name, values in named.items():
            self.tensor(name, values)


class BinaryReader:
    """Reads little-endian fields from a buffer, tracking the offset.

    Every failure raises `ContainerError` with the offset of the field that
    could not be read.
    """

    def __init__(self, data: bytes):
        self._data = memoryview(data)
        self.offset = 0

    def remaining(self) -> int:
        return len(self._data) - self.offset

    def raw(self, size: int, what: str = 'data') -> bytes:
        if size < 0 or self.offset + size > len(self._data):
            raise ContainerError(
                f'truncated {what}: needed {size} bytes, {self.remaining()} left',
                self.offset)
        result = bytes(self._data[self.offset:self.offset + size])
        self.offset += size
        return result

    def _unpack(self, fmt: str, what: str) -> int:
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.raw(size, what))[0]

    def u8(self, what: str = 'u8') -> int:
        return self._unpack('<B', what)

    def u16(self, what: str = 'u16') -> int:
        return self._unpack('<H', what)

    def u32(self, what: str = 'u32') -> int:
        return self._unpack('<I', what)

    def u64(self, what: str = 'u64') -> int:
        return self._unpack('<Q', what)

    def magic(self, expected: bytes) -> None:
        start = self.offset
        found = self.raw(len(expected), 'magic')
        if found != expected:
            raise ContainerError('bad magic', start)

    def version(self, *supported: int) -> int:
        """Reads a u32 version, which must be one of `supported`."""
        start = self.offset
        version = self.u32('version')
        if version not in supported:
            expected = ', '.join(str(v) for v in supported)
            raise ContainerError(
                f'unsupported version {version} (expected {expected})', start)
        return version

    def short_string(self, what: str = 'string') -> str:
        start = self.offset
        data = self.raw(self.u16(f'{what} length'), what)
        try:
            return data.decode('utf-8')
        except UnicodeDecodeError:
            raise ContainerError(f'{what} is not valid UTF-8', start)

    def long_bytes(self, what: str = 'blob') -> bytes:
        return self.raw(self.u64(f'{what} length'), what)

    def array(self, shape: tuple[int, ...], dtype: str,
              what: str = 'values') -> numpy.ndarray:
        itemsize = numpy.dtype(dtype).itemsize
        count = 1
        for dim in shape:
            count *= dim
        data = self.raw(count * itemsize, what)
        return numpy.frombuffer(data, dtype=dtype).astype(
            numpy.float64).reshape(shape)

    def tensor(self) -> tuple[str, numpy.ndarray]:
        name = self.short_string('tensor name')
        rank = self.u32('tensor rank')
        if rank > 8:
            raise ContainerError(f'implausible tensor rank {rank}',
                                 self.offset - 4)
        shape = tuple(self.u64('tensor dimension') for _ in range(rank))
        return name, self.array(shape, '<f8', f'tensor {name}')

    def tensors(self) -> dict[str, numpy.ndarray]:
        count = self.u64('tensor count')
        result = {}
        for _ in range(count):
            start = self.offset
            name, values = self.tensor()
            if name in result:
                raise ContainerError(f'duplicate tensor {name!r}', start)
            result[name] = values
        return result

    def end(self) -> None:
        if self.remaining():
            raise ContainerError(f'{self.remaining()} trailing bytes',
                                 self.offset)
