//! Half-integer angular momenta stored as doubled integers, so j = 3/2 is
//! `Half(3)` and j = 2 is `Half(4)`. Keeps triangle rules and phase factors
//! exact without floating-point comparisons.

use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Half(pub i32);

impl Half {
    pub fn from_int(j: i32) -> Self {
        Half(2 * j)
    }

    /// Doubled value, the native representation.
    pub fn doubled(self) -> i32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Multiplicity 2j+1.
    pub fn mult(self) -> i32 {
        self.0 + 1
    }

    /// (-1)^j, only defined for integer j.
    pub fn parity_phase(self) -> i32 {
        debug_assert!(self.is_integer());
        if (self.0 / 2) % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Triangle rule |a-b| <= c <= a+b with matching integer/half-integer parity.
pub fn triangle_ok(a: Half, b: Half, c: Half) -> bool {
    let (a, b, c) = (a.0, b.0, c.0);
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// (-1)^(k/2) for an even doubled sum k; phases in Racah algebra always
/// combine to integers before exponentiation.
pub fn phase_from_doubled(k: i32) -> f64 {
    debug_assert!(k % 2 == 0, "phase exponent must be an integer, got {k}/2");
    if (k / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_forms() {
        assert_eq!(Half(3).to_string(), "3/2");
        assert_eq!(Half(4).to_string(), "2");
    }

    #[test]
    fn triangle() {
        assert!(triangle_ok(Half(1), Half(2), Half(3)));
        assert!(!triangle_ok(Half(1), Half(2), Half(4)));
        assert!(!triangle_ok(Half(2), Half(2), Half(5)));
    }
}
