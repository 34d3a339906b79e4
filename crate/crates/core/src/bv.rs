//! Fixed-width bit-vector values with SMT-LIB semantics (modular arithmetic,
//! total division).

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use primitive_types::U256;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitVec {
    pub width: u32,
    pub bits: U256,
}

fn mask(width: u32) -> U256 {
    if width >= 256 {
        U256::MAX
    } else {
        (U256::one() << width) - 1
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bv{}({})", self.width, self.to_unsigned())
    }
}

impl BitVec {
    pub fn new(width: u32, bits: U256) -> Self {
        assert!((1..=256).contains(&width), "bit-vector width {width}");
        BitVec {
            width,
            bits: bits & mask(width),
        }
    }

    pub fn zero(width: u32) -> Self {
        BitVec::new(width, U256::zero())
    }

    pub fn ones(width: u32) -> Self {
        BitVec::new(width, U256::MAX)
    }

    pub fn from_u64(width: u32, v: u64) -> Self {
        BitVec::new(width, U256::from(v))
    }

    pub fn from_i64(width: u32, v: i64) -> Self {
        BitVec::from_bigint(width, &BigInt::from(v))
    }

    /// Two's-complement wrap of an arbitrary integer.
    pub fn from_bigint(width: u32, v: &BigInt) -> Self {
        let modulus = BigInt::from(1) << width as usize;
        let mut r = v % &modulus;
        if r.sign() == Sign::Minus {
            r += &modulus;
        }
        let (_, bytes) = r.to_bytes_be();
        let mut buf = [0u8; 32];
        let n = bytes.len().min(32);
        buf[32 - n..].copy_from_slice(&bytes[bytes.len() - n..]);
        BitVec::new(width, U256::from_big_endian(&buf))
    }

    pub fn to_unsigned(&self) -> BigInt {
        let buf = self.bits.to_big_endian();
        BigInt::from_bytes_be(Sign::Plus, &buf)
    }

    pub fn to_signed(&self) -> BigInt {
        let u = self.to_unsigned();
        if self.msb() {
            u - (BigInt::from(1) << self.width as usize)
        } else {
            u
        }
    }

    pub fn msb(&self) -> bool {
        self.bits.bit(self.width as usize - 1)
    }

    pub fn is_zero(&self) -> bool {
        self.bits.is_zero()
    }

    fn same(&self, o: &BitVec) {
        debug_assert_eq!(self.width, o.width, "bit-vector width mismatch");
    }

    pub fn add(&self, o: &BitVec) -> BitVec {
        self.same(o);
        BitVec::new(self.width, self.bits.overflowing_add(o.bits).0)
    }

    pub fn sub(&self, o: &BitVec) -> BitVec {
        self.same(o);
        BitVec::new(self.width, self.bits.overflowing_sub(o.bits).0)
    }

    pub fn mul(&self, o: &BitVec) -> BitVec {
        self.same(o);
        BitVec::new(self.width, self.bits.overflowing_mul(o.bits).0)
    }

    pub fn neg(&self) -> BitVec {
        BitVec::zero(self.width).sub(self)
    }

    pub fn not(&self) -> BitVec {
        BitVec::new(self.width, !self.bits)
    }

    pub fn and(&self, o: &BitVec) -> BitVec {
        BitVec::new(self.width, self.bits & o.bits)
    }

    pub fn or(&self, o: &BitVec) -> BitVec {
        BitVec::new(self.width, self.bits | o.bits)
    }

    pub fn xor(&self, o: &BitVec) -> BitVec {
        BitVec::new(self.width, self.bits ^ o.bits)
    }

    /// `bvudiv`: division by zero yields all ones.
    pub fn udiv(&self, o: &BitVec) -> BitVec {
        self.same(o);
        if o.is_zero() {
            BitVec::ones(self.width)
        } else {
            BitVec::new(self.width, self.bits / o.bits)
        }
    }

    /// `bvurem`: remainder by zero yields the dividend.
    pub fn urem(&self, o: &BitVec) -> BitVec {
        self.same(o);
        if o.is_zero() {
            *self
        } else {
            BitVec::new(self.width, self.bits % o.bits)
        }
    }

    pub fn sdiv(&self, o: &BitVec) -> BitVec {
        match (self.msb(), o.msb()) {
            (false, false) => self.udiv(o),
            (true, false) => self.neg().udiv(o).neg(),
            (false, true) => self.udiv(&o.neg()).neg(),
            (true, true) => self.neg().udiv(&o.neg()),
        }
    }

    pub fn srem(&self, o: &BitVec) -> BitVec {
        match (self.msb(), o.msb()) {
            (false, false) => self.urem(o),
            (true, false) => self.neg().urem(o).neg(),
            (false, true) => self.urem(&o.neg()),
            (true, true) => self.neg().urem(&o.neg()).neg(),
        }
    }

    fn shift_amount(&self, o: &BitVec) -> Option<usize> {
        if o.bits >= U256::from(self.width) {
            None
        } else {
            Some(o.bits.low_u32() as usize)
        }
    }

    pub fn shl(&self, o: &BitVec) -> BitVec {
        match self.shift_amount(o) {
            Some(s) => BitVec::new(self.width, self.bits << s),
            None => BitVec::zero(self.width),
        }
    }

    pub fn lshr(&self, o: &BitVec) -> BitVec {
        match self.shift_amount(o) {
            Some(s) => BitVec::new(self.width, self.bits >> s),
            None => BitVec::zero(self.width),
        }
    }

    pub fn ashr(&self, o: &BitVec) -> BitVec {
        if !self.msb() {
            return self.lshr(o);
        }
        match self.shift_amount(o) {
            Some(s) => self.not().lshr(&BitVec::from_u64(self.width, s as u64)).not(),
            None => BitVec::ones(self.width),
        }
    }

    pub fn ucmp(&self, o: &BitVec) -> Ordering {
        self.bits.cmp(&o.bits)
    }

    pub fn scmp(&self, o: &BitVec) -> Ordering {
        match (self.msb(), o.msb()) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self.bits.cmp(&o.bits),
        }
    }

    pub fn zext(&self, extra: u32) -> BitVec {
        BitVec::new(self.width + extra, self.bits)
    }

    pub fn sext(&self, extra: u32) -> BitVec {
        let w = self.width + extra;
        if self.msb() {
            BitVec::new(w, self.bits | (mask(w) & !mask(self.width)))
        } else {
            BitVec::new(w, self.bits)
        }
    }

    pub fn extract(&self, hi: u32, lo: u32) -> BitVec {
        BitVec::new(hi - lo + 1, self.bits >> lo as usize)
    }

    /// Binary digits grouped in bytes from the most significant end, e.g.
    /// `00000000 00000000 00000000 00000101`.
    pub fn grouped_binary(&self) -> String {
        let digits: String = (0..self.width)
            .rev()
            .map(|i| if self.bits.bit(i as usize) { '1' } else { '0' })
            .collect();
        let mut out = String::new();
        let lead = (self.width % 8) as usize;
        let (first, rest) = if lead == 0 {
            ("", digits.as_str())
        } else {
            digits.split_at(lead)
        };
        if !first.is_empty() {
            out.push_str(first);
        }
        for chunk in rest.as_bytes().chunks(8) {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(std::str::from_utf8(chunk).expect("ascii"));
        }
        out
    }

    /// SMT-LIB literal: hexadecimal when the width is a multiple of four.
    pub fn smt_literal(&self) -> String {
        if self.width % 4 == 0 {
            let hex = format!("{:x}", self.bits);
            format!("#x{:0>w$}", hex, w = (self.width / 4) as usize)
        } else {
            let bin: String = (0..self.width)
                .rev()
                .map(|i| if self.bits.bit(i as usize) { '1' } else { '0' })
                .collect();
            format!("#b{bin}")
        }
    }
}
