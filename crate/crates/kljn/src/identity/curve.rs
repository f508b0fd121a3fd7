//! secp256k1 arithmetic built directly from the published constants:
//! p = 2^256 - 2^32 - 977, curve y^2 = x^3 + 7, generator G, prime order n.
//! Affine chord-and-tangent formulas with Fermat inverses; speed and
//! side-channel shape are non-goals here, correctness is checked against an
//! independent repeated-addition oracle in the test suite.

use num_bigint::BigUint;
use num_traits::Zero;
use std::sync::LazyLock;

fn hexu(s: &str) -> BigUint {
    BigUint::parse_bytes(s.as_bytes(), 16).expect("curve constant")
}

pub(crate) static FIELD_P: LazyLock<BigUint> = LazyLock::new(|| {
    hexu("fffffffffffffffffffffffffffffffffffffffffffffffffffffffefffffc2f")
});
pub(crate) static ORDER_N: LazyLock<BigUint> = LazyLock::new(|| {
    hexu("fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141")
});
static GEN_X: LazyLock<BigUint> = LazyLock::new(|| {
    hexu("79be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798")
});
static GEN_Y: LazyLock<BigUint> = LazyLock::new(|| {
    hexu("483ada7726a3c4655da4fbfc0e1108a8fd17b448a68554199c47d08ffb10d4b8")
});

fn add_m(a: &BigUint, b: &BigUint) -> BigUint {
    (a + b) % &*FIELD_P
}

fn sub_m(a: &BigUint, b: &BigUint) -> BigUint {
    ((a + &*FIELD_P) - b) % &*FIELD_P
}

fn mul_m(a: &BigUint, b: &BigUint) -> BigUint {
    (a * b) % &*FIELD_P
}

fn inv_m(a: &BigUint) -> BigUint {
    // Fermat: a^(p-2) mod p; p is prime and a never vanishes on this curve's
    // points (a zero y would mean an order-2 point, impossible under odd n)
    assert!(!a.is_zero(), "field inverse of zero");
    a.modpow(&(&*FIELD_P - 2u32), &FIELD_P)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Point {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl Point {
    pub(crate) fn generator() -> Point {
        Point::Affine {
            x: GEN_X.clone(),
            y: GEN_Y.clone(),
        }
    }

    pub(crate) fn is_on_curve(&self) -> bool {
        match self {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                let lhs = mul_m(y, y);
                let rhs = add_m(&mul_m(&mul_m(x, x), x), &BigUint::from(7u32));
                lhs == rhs
            }
        }
    }

    pub(crate) fn double(&self) -> Point {
        match self {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => {
                let lambda = mul_m(
                    &mul_m(&BigUint::from(3u32), &mul_m(x, x)),
                    &inv_m(&mul_m(&BigUint::from(2u32), y)),
                );
                let x3 = sub_m(&mul_m(&lambda, &lambda), &add_m(x, x));
                let y3 = sub_m(&mul_m(&lambda, &sub_m(x, &x3)), y);
                Point::Affine { x: x3, y: y3 }
            }
        }
    }

    pub(crate) fn add(&self, other: &Point) -> Point {
        match (self, other) {
            (Point::Infinity, q) => q.clone(),
            (p, Point::Infinity) => p.clone(),
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => {
                if x1 == x2 {
                    return if add_m(y1, y2).is_zero() {
                        Point::Infinity
                    } else {
                        self.double()
                    };
                }
                let lambda = mul_m(&sub_m(y2, y1), &inv_m(&sub_m(x2, x1)));
                let x3 = sub_m(&sub_m(&mul_m(&lambda, &lambda), x1), x2);
                let y3 = sub_m(&mul_m(&lambda, &sub_m(x1, &x3)), y1);
                Point::Affine { x: x3, y: y3 }
            }
        }
    }

    /// MSB-first double-and-add over a fixed 256-bit window, so every scalar
    /// walks the same loop shape.
    pub(crate) fn scalar_mul(scalar: &BigUint, base: &Point) -> Point {
        let mut bytes = scalar.to_bytes_be();
        assert!(bytes.len() <= 32, "scalar exceeds 256 bits");
        while bytes.len() < 32 {
            bytes.insert(0, 0);
        }
        let mut acc = Point::Infinity;
        for byte in bytes {
            for shift in (0..8).rev() {
                acc = acc.double();
                if byte >> shift & 1 == 1 {
                    acc = acc.add(base);
                }
            }
        }
        acc
    }
}
