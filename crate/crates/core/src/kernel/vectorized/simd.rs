//! Native-register implementations of [`Lanes`].

#![cfg(target_arch = "x86_64")]

use std::arch::x86_64::*;

use super::network::Lanes;

/// 8 × i32 in one AVX2 register.
#[derive(Clone, Copy)]
pub(crate) struct Avx2(__m256i);

#[inline(always)]
unsafe fn avx2_level<const BLEND: i32>(x: __m256i, partner: __m256i) -> __m256i {
    let mn = _mm256_min_epi32(x, partner);
    let mx = _mm256_max_epi32(x, partner);
    _mm256_blend_epi32::<BLEND>(mn, mx)
}

#[inline(always)]
unsafe fn avx2_clean(x: __m256i) -> __m256i {
    let x = avx2_level::<0xF0>(x, _mm256_permute2x128_si256::<0x01>(x, x));
    let x = avx2_level::<0xCC>(x, _mm256_shuffle_epi32::<0x4E>(x));
    avx2_level::<0xAA>(x, _mm256_shuffle_epi32::<0xB1>(x))
}

unsafe impl Lanes for Avx2 {
    const WIDTH: usize = 8;

    #[inline(always)]
    unsafe fn load(src: &[i32]) -> Self {
        let src = &src[..8];
        Avx2(_mm256_loadu_si256(src.as_ptr().cast()))
    }

    #[inline(always)]
    unsafe fn store(self, dst: &mut [i32]) {
        let dst = &mut dst[..8];
        _mm256_storeu_si256(dst.as_mut_ptr().cast(), self.0)
    }

    #[inline(always)]
    unsafe fn reduce_min(self) -> i32 {
        let x = self.0;
        let x = _mm256_min_epi32(x, _mm256_permute2x128_si256::<0x01>(x, x));
        let x = _mm256_min_epi32(x, _mm256_shuffle_epi32::<0x4E>(x));
        let x = _mm256_min_epi32(x, _mm256_shuffle_epi32::<0xB1>(x));
        _mm256_cvtsi256_si32(x)
    }

    #[inline(always)]
    unsafe fn reduce_max(self) -> i32 {
        let x = self.0;
        let x = _mm256_max_epi32(x, _mm256_permute2x128_si256::<0x01>(x, x));
        let x = _mm256_max_epi32(x, _mm256_shuffle_epi32::<0x4E>(x));
        let x = _mm256_max_epi32(x, _mm256_shuffle_epi32::<0xB1>(x));
        _mm256_cvtsi256_si32(x)
    }

    #[inline(always)]
    unsafe fn merge(self, other: Self) -> (Self, Self) {
        let reverse = _mm256_setr_epi32(7, 6, 5, 4, 3, 2, 1, 0);
        let b = _mm256_permutevar8x32_epi32(other.0, reverse);
        let lo = _mm256_min_epi32(self.0, b);
        let hi = _mm256_max_epi32(self.0, b);
        (Avx2(avx2_clean(lo)), Avx2(avx2_clean(hi)))
    }

    #[inline(always)]
    unsafe fn load_partial(src: &[i32]) -> Self {
        let k = src.len() as i32;
        let lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
        let mask = _mm256_cmpgt_epi32(_mm256_set1_epi32(k), lane);
        let loaded = _mm256_maskload_epi32(src.as_ptr(), mask);
        Avx2(_mm256_blendv_epi8(
            _mm256_set1_epi32(i32::MAX),
            loaded,
            mask,
        ))
    }
}

/// 16 × i32 in one AVX-512 register.
#[derive(Clone, Copy)]
pub(crate) struct Avx512(__m512i);

#[inline(always)]
unsafe fn avx512_level(x: __m512i, partner: __m512i, upper: __mmask16) -> __m512i {
    let mn = _mm512_min_epi32(x, partner);
    _mm512_mask_max_epi32(mn, upper, x, partner)
}

#[inline(always)]
unsafe fn avx512_clean(x: __m512i) -> __m512i {
    // lane distance 8, 4, 2, 1
    let x = avx512_level(x, _mm512_shuffle_i32x4::<0x4E>(x, x), 0xff00);
    let x = avx512_level(x, _mm512_shuffle_i32x4::<0xB1>(x, x), 0xf0f0);
    let x = avx512_level(x, _mm512_shuffle_epi32::<0x4E>(x), 0xcccc);
    avx512_level(x, _mm512_shuffle_epi32::<0xB1>(x), 0xaaaa)
}

unsafe impl Lanes for Avx512 {
    const WIDTH: usize = 16;

    #[inline(always)]
    unsafe fn load(src: &[i32]) -> Self {
        let src = &src[..16];
        Avx512(_mm512_loadu_si512(src.as_ptr().cast()))
    }

    #[inline(always)]
    unsafe fn store(self, dst: &mut [i32]) {
        let dst = &mut dst[..16];
        _mm512_storeu_si512(dst.as_mut_ptr().cast(), self.0)
    }

    #[inline(always)]
    unsafe fn reduce_min(self) -> i32 {
        _mm512_reduce_min_epi32(self.0)
    }

    #[inline(always)]
    unsafe fn reduce_max(self) -> i32 {
        _mm512_reduce_max_epi32(self.0)
    }

    #[inline(always)]
    unsafe fn merge(self, other: Self) -> (Self, Self) {
        let reverse = _mm512_set_epi32(0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15);
        let b = _mm512_permutexvar_epi32(reverse, other.0);
        let lo = _mm512_min_epi32(self.0, b);
        let hi = _mm512_max_epi32(self.0, b);
        (Avx512(avx512_clean(lo)), Avx512(avx512_clean(hi)))
    }

    #[inline(always)]
    unsafe fn load_partial(src: &[i32]) -> Self {
        let mask: __mmask16 = (1u32 << src.len()).wrapping_sub(1) as __mmask16;
        Avx512(_mm512_mask_loadu_epi32(
            _mm512_set1_epi32(i32::MAX),
            mask,
            src.as_ptr(),
        ))
    }

    #[inline(always)]
    unsafe fn store_partial(self, dst: &mut [i32]) {
        let mask: __mmask16 = (1u32 << dst.len()).wrapping_sub(1) as __mmask16;
        _mm512_mask_storeu_epi32(dst.as_mut_ptr(), mask, self.0)
    }
}
