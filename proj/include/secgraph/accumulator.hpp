#pragma once

#include <cstdint>

#include <gmpxx.h>

#include "secgraph/bytes.hpp"

namespace secgraph {

// 256-bit prime derived from a label: SHA-256 with the high bit forced, then
// the next prime. Rehashes in the (astronomically rare) case the next prime
// would not fit in 256 bits.
mpz_class hash_to_prime(ByteSpan label);

bool probably_prime(const mpz_class& v, int reps = 64);

Bytes mpz_to_bytes(const mpz_class& v);
mpz_class mpz_from_bytes(ByteSpan bytes);

// RSA accumulator keypair over a safe-prime modulus. The factorization stays
// in trusted memory; only (n, g) and accumulated values are ever public.
struct AccumulatorKey {
    mpz_class n;     // product of two safe primes
    mpz_class g;     // quadratic residue, the empty-set digest
    mpz_class p, q;  // trapdoor
    mpz_class phi;   // (p-1)(q-1)

    static AccumulatorKey generate(unsigned modulus_bits, uint64_t seed);
};

// Trusted-side accumulator digest. Insert, remove, and swap each cost one
// modular exponentiation thanks to the trapdoor.
class Accumulator {
public:
    explicit Accumulator(const AccumulatorKey& key) : key_(&key), value_(key.g) {}

    void insert(const mpz_class& prime);
    void remove(const mpz_class& prime);
    void swap(const mpz_class& old_prime, const mpz_class& new_prime);

    const mpz_class& value() const { return value_; }
    void set_value(mpz_class v) { value_ = std::move(v); }

private:
    const AccumulatorKey* key_;
    mpz_class value_;
};

// Untrusted-side exponent product. Knows only public parameters; witnesses
// cost one division plus one modular exponentiation.
class WitnessProduct {
public:
    WitnessProduct() : x_p_(1) {}

    void multiply(const mpz_class& prime) { x_p_ *= prime; }
    bool divide(const mpz_class& prime);
    bool divides(const mpz_class& prime) const;
    mpz_class witness(const mpz_class& n, const mpz_class& g, const mpz_class& prime) const;
    const mpz_class& value() const { return x_p_; }
    bool empty() const { return x_p_ == 1; }

private:
    mpz_class x_p_;
};

bool verify_witness(const mpz_class& n, const mpz_class& witness, const mpz_class& prime,
                    const mpz_class& accumulator_value);

}  // namespace secgraph
