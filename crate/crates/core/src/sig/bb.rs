//! Boneh-Boyen short signatures: `sig = g^{1/(x + msg)}`, verified with the
//! pairing check `e(sig, y * g^msg) = e(g, g)`. These are the table entries
//! of the set-membership proof.

use crate::group::{GroupContext, GroupElement, Scalar};
use crate::Result;

/// Signs a scalar message. Errors with [`crate::Error::ZeroDenominator`]
/// when `x + msg = 0 mod q`, which signals the caller to re-draw the key.
pub fn bb_sign(ctx: &GroupContext, sk: &Scalar, msg: &Scalar) -> Result<GroupElement> {
    let denom = ctx.scalar_add(sk, msg);
    let inv = ctx.scalar_inv(&denom)?;
    Ok(ctx.exp_g(&inv))
}

/// Pairing check; requires a pairing-capable backend.
pub fn bb_verify(
    ctx: &GroupContext,
    pk: &GroupElement,
    msg: &Scalar,
    sig: &GroupElement,
) -> Result<bool> {
    let rhs = ctx.pair_gg()?;
    let lhs = ctx.pair(sig, &ctx.mul(pk, &ctx.exp_g(msg)))?;
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::SecurityProfile;
    use crate::rng::derive_rng;
    use crate::{Error, GroupContext};

    #[test]
    fn toy_mock_worked_example() {
        let ctx = GroupContext::setup_mock(SecurityProfile::Toy, b"x").unwrap();
        let x = ctx.scalar_from_u64(4);
        let pk = ctx.exp_g(&x);
        // 1/(4+2) = 2 mod 11, so the signature is g^2
        let sig = bb_sign(&ctx, &x, &ctx.scalar_from_u64(2)).unwrap();
        assert_eq!(sig, ctx.exp_g(&ctx.scalar_from_u64(2)));
        assert!(bb_verify(&ctx, &pk, &ctx.scalar_from_u64(2), &sig).unwrap());
        // e(g^2, g^7) = e(g,g)^3 != e(g,g)
        assert!(!bb_verify(&ctx, &pk, &ctx.scalar_from_u64(3), &sig).unwrap());
    }

    #[test]
    fn zero_denominator_is_an_error() {
        let ctx = GroupContext::setup_mock(SecurityProfile::Toy, b"x").unwrap();
        assert!(matches!(
            bb_sign(&ctx, &crate::Scalar::zero(), &crate::Scalar::zero()),
            Err(Error::ZeroDenominator)
        ));
        // x + msg = 11 = 0 mod 11
        assert!(bb_sign(&ctx, &ctx.scalar_from_u64(4), &ctx.scalar_from_u64(7)).is_err());
    }

    // Exhaustive in the toy group: valid messages verify, everything else is
    // rejected.
    #[test]
    fn exhaustive_toy_verification() {
        let ctx = GroupContext::setup_mock(SecurityProfile::Toy, b"x").unwrap();
        for x in 0u64..11 {
            let sk = ctx.scalar_from_u64(x);
            let pk = ctx.exp_g(&sk);
            for m in 0u64..11 {
                let msg = ctx.scalar_from_u64(m);
                match bb_sign(&ctx, &sk, &msg) {
                    Err(_) => assert_eq!((x + m) % 11, 0),
                    Ok(sig) => {
                        assert!(bb_verify(&ctx, &pk, &msg, &sig).unwrap());
                        for m2 in 0u64..11 {
                            if m2 != m {
                                assert!(
                                    !bb_verify(&ctx, &pk, &ctx.scalar_from_u64(m2), &sig).unwrap()
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn verification_needs_a_pairing() {
        let ctx = GroupContext::setup_group(SecurityProfile::Toy, b"x").unwrap();
        let mut rng = derive_rng(b"bb", "nopairing");
        let keys = crate::sig::keygen(&ctx, &mut rng);
        let msg = ctx.scalar_from_u64(3);
        let sig = bb_sign(&ctx, &keys.secret, &msg).unwrap();
        assert!(matches!(
            bb_verify(&ctx, &keys.public, &msg, &sig),
            Err(Error::PairingUnavailable)
        ));
    }
}
