//! Small integer helpers shared by the shift, tower and complex modules.

use num_integer::Integer;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn primes_up_to(limit: u64) -> Vec<u64> {
    (2..=limit).filter(|&n| is_prime(n)).collect()
}

/// Inverse of `a` modulo `modulus`, if `gcd(a, modulus) = 1`.
pub fn mod_inverse(a: i64, modulus: i64) -> Option<i64> {
    let a = a.rem_euclid(modulus);
    let e = a.extended_gcd(&modulus);
    (e.gcd == 1).then(|| e.x.rem_euclid(modulus))
}
