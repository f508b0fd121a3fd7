//! Cross-checks the curve arithmetic against an independent model that
//! shares no code with the implementation: inverses via extended Euclid
//! rather than Fermat exponentiation, scalar multiples via repeated
//! addition rather than double-and-add, and decompression that re-derives
//! y from x through a modular square root.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::One;

use kljn::identity::{compress_public, private_key_from_bits, public_from_private, uncompressed_hex};
use kljn::keycodec::hex_to_binary;
use rand::{RngCore, SeedableRng};

fn hexint(s: &str) -> BigInt {
    BigInt::parse_bytes(s.as_bytes(), 16).unwrap()
}

fn field_p() -> BigInt {
    hexint("fffffffffffffffffffffffffffffffffffffffffffffffffffffffefffffc2f")
}

fn generator() -> (BigInt, BigInt) {
    (
        hexint("79be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"),
        hexint("483ada7726a3c4655da4fbfc0e1108a8fd17b448a68554199c47d08ffb10d4b8"),
    )
}

fn inv(a: &BigInt, p: &BigInt) -> BigInt {
    let e = a.extended_gcd(p);
    assert!(e.gcd.is_one(), "not invertible");
    e.x.mod_floor(p)
}

/// None is the point at infinity.
type Pt = Option<(BigInt, BigInt)>;

fn add(p: &BigInt, a: &Pt, b: &Pt) -> Pt {
    let (ax, ay) = match a {
        Some(t) => t,
        None => return b.clone(),
    };
    let (bx, by) = match b {
        Some(t) => t,
        None => return a.clone(),
    };
    let lam = if ax == bx {
        if (ay + by).mod_floor(p) == BigInt::ZERO {
            return None;
        }
        (BigInt::from(3) * ax * ax * inv(&(BigInt::from(2) * ay), p)).mod_floor(p)
    } else {
        ((by - ay) * inv(&(bx - ax).mod_floor(p), p)).mod_floor(p)
    };
    let x = (&lam * &lam - ax - bx).mod_floor(p);
    let y = (&lam * (ax - &x) - ay).mod_floor(p);
    Some((x, y))
}

/// Runs a scalar through the library and parses the resulting affine pair.
fn library_public(scalar_hex: &str) -> (BigInt, BigInt) {
    let key = private_key_from_bits(&hex_to_binary(scalar_hex).unwrap()).unwrap();
    let hex = uncompressed_hex(&public_from_private(&key));
    assert_eq!(hex.len(), 130);
    assert!(hex.starts_with("04"));
    (hexint(&hex[2..66]), hexint(&hex[66..]))
}

#[test]
fn small_multiples_match_repeated_addition() {
    let p = field_p();
    let g: Pt = Some(generator());
    let mut acc: Pt = None;
    for k in 1u64..=64 {
        acc = add(&p, &acc, &g);
        let want = acc.clone().unwrap();
        let got = library_public(&format!("{k:064x}"));
        assert_eq!(got, want, "scalar {k}");
    }
}

#[test]
fn compressed_form_recovers_the_full_point() {
    let p = field_p();
    // p = 3 mod 4, so rhs^((p+1)/4) is a square root whenever one exists
    let root_exp = (&p + BigInt::from(1)) / BigInt::from(4);
    for k in 1u64..=32 {
        let key = private_key_from_bits(&hex_to_binary(&format!("{k:064x}")).unwrap()).unwrap();
        let public = public_from_private(&key);
        let compact = compress_public(&public);
        assert_eq!(compact.len(), 66, "scalar {k}");
        let x = hexint(&compact[2..]);
        let rhs = (&x * &x * &x + BigInt::from(7)).mod_floor(&p);
        let root = rhs.modpow(&root_exp, &p);
        assert_eq!((&root * &root).mod_floor(&p), rhs, "x not on the curve");
        let want_even = match &compact[..2] {
            "02" => true,
            "03" => false,
            other => panic!("bad prefix {other}"),
        };
        let y = if root.is_even() == want_even {
            root
        } else {
            (&p - root).mod_floor(&p)
        };
        assert_eq!((x, y), library_public(&format!("{k:064x}")), "scalar {k}");
    }
}

#[test]
fn adding_public_points_matches_adding_scalars() {
    let p = field_p();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
    for trial in 0..16 {
        let mut a = [0u8; 32];
        let mut b = [0u8; 32];
        rng.fill_bytes(&mut a);
        rng.fill_bytes(&mut b);
        // 254-bit scalars keep the sum inside the group order
        a[0] &= 0x3f;
        b[0] &= 0x3f;
        let fa = BigInt::from_bytes_be(Sign::Plus, &a);
        let fb = BigInt::from_bytes_be(Sign::Plus, &b);
        if fa == BigInt::ZERO || fb == BigInt::ZERO {
            continue;
        }
        let pa = Some(library_public(&format!("{fa:064x}")));
        let pb = Some(library_public(&format!("{fb:064x}")));
        let sum = &fa + &fb;
        let want = library_public(&format!("{sum:064x}"));
        assert_eq!(add(&p, &pa, &pb).unwrap(), want, "trial {trial}");
    }
}
