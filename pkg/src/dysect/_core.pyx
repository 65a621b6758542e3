# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, nonecheck=False
"""Compiled tables. Mirrors ``dysect._pure`` step for step: same placements,
same RNG draws and the same counters, so both backends produce identical dumps."""

from libc.stdint cimport uint8_t, uint32_t, uint64_t, int64_t
from libc.stdlib cimport malloc, calloc, realloc, free
from libc.string cimport memcpy, memmove, memset
from libc.math cimport ceil, floor

import numpy as np

from .errors import InsertFailed, MigrationError, ShrinkFailed

cdef extern from "sys/mman.h" nogil:
    void *mmap(void *addr, size_t length, int prot, int flags, int fd, long offset)
    int munmap(void *addr, size_t length)
    int madvise(void *addr, size_t length, int advice)
    enum: PROT_READ
    enum: PROT_WRITE
    enum: MAP_PRIVATE
    enum: MAP_ANONYMOUS
    enum: MAP_NORESERVE
    enum: MADV_DONTNEED
    void *MAP_FAILED

include "_hashing.pxi"
include "_scratch.pxi"
include "_base.pxi"
include "_cuckoo.pxi"
include "_dysect.pxi"
include "_flat.pxi"
include "_sub.pxi"
include "_words.pxi"

BACKEND = "compiled"
HAS_RESERVE = _probe_reserve()
