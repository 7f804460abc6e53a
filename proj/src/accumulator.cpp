#include "secgraph/accumulator.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "secgraph/crypto.hpp"

namespace secgraph {

mpz_class hash_to_prime(ByteSpan label) {
    Bytes tagged;
    tagged.reserve(label.size() + 1);
    tagged.push_back(0x06);
    tagged.insert(tagged.end(), label.begin(), label.end());
    Digest32 d = sha256(as_span(tagged));
    for (;;) {
        mpz_class v;
        mpz_import(v.get_mpz_t(), d.size(), 1, 1, 0, 0, d.data());
        mpz_setbit(v.get_mpz_t(), 255);
        mpz_class p;
        mpz_nextprime(p.get_mpz_t(), v.get_mpz_t());
        if (mpz_sizeinbase(p.get_mpz_t(), 2) == 256) return p;
        d = sha256(ByteSpan(d.data(), d.size()));
    }
}

bool probably_prime(const mpz_class& v, int reps) {
    return mpz_probab_prime_p(v.get_mpz_t(), reps) != 0;
}

Bytes mpz_to_bytes(const mpz_class& v) {
    if (v < 0) throw std::invalid_argument("negative value");
    if (v == 0) return Bytes{0};
    size_t count = 0;
    Bytes out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
    mpz_export(out.data(), &count, 1, 1, 0, 0, v.get_mpz_t());
    out.resize(count);
    return out;
}

mpz_class mpz_from_bytes(ByteSpan bytes) {
    mpz_class v;
    if (!bytes.empty()) mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 0, 0, bytes.data());
    return v;
}

AccumulatorKey AccumulatorKey::generate(unsigned modulus_bits, uint64_t seed) {
    if (modulus_bits < 64 || modulus_bits % 2 != 0)
        throw std::invalid_argument("modulus_bits must be even and at least 64");

    // Deterministic in (modulus_bits, seed), and safe-prime search is by far
    // the most expensive step anywhere, so completed keys are memoized.
    static std::mutex cache_mu;
    static std::map<std::pair<unsigned, uint64_t>, AccumulatorKey> cache;
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        auto it = cache.find({modulus_bits, seed});
        if (it != cache.end()) return it->second;
    }

    gmp_randclass rng(gmp_randinit_mt);
    rng.seed(static_cast<unsigned long>(seed));

    unsigned half = modulus_bits / 2;
    auto safe_prime = [&]() {
        for (;;) {
            mpz_class cand = rng.get_z_bits(half - 1);
            // Force the top two candidate bits so p*q lands on modulus_bits exactly.
            mpz_setbit(cand.get_mpz_t(), half - 2);
            mpz_setbit(cand.get_mpz_t(), half - 3);
            mpz_class sophie;
            mpz_nextprime(sophie.get_mpz_t(), cand.get_mpz_t());
            mpz_class p = 2 * sophie + 1;
            if (mpz_sizeinbase(p.get_mpz_t(), 2) == half &&
                mpz_probab_prime_p(p.get_mpz_t(), 40))
                return p;
        }
    };

    AccumulatorKey key;
    key.p = safe_prime();
    do {
        key.q = safe_prime();
    } while (key.q == key.p);
    key.n = key.p * key.q;
    key.phi = (key.p - 1) * (key.q - 1);

    mpz_class r = rng.get_z_range(key.n);
    mpz_class g;
    mpz_powm_ui(g.get_mpz_t(), r.get_mpz_t(), 2, key.n.get_mpz_t());
    while (g <= 1) {
        r = rng.get_z_range(key.n);
        mpz_powm_ui(g.get_mpz_t(), r.get_mpz_t(), 2, key.n.get_mpz_t());
    }
    key.g = g;
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        cache.emplace(std::make_pair(modulus_bits, seed), key);
    }
    return key;
}

void Accumulator::insert(const mpz_class& prime) {
    mpz_class next;
    mpz_powm(next.get_mpz_t(), value_.get_mpz_t(), prime.get_mpz_t(), key_->n.get_mpz_t());
    value_ = next;
}

void Accumulator::remove(const mpz_class& prime) {
    mpz_class inv;
    if (mpz_invert(inv.get_mpz_t(), prime.get_mpz_t(), key_->phi.get_mpz_t()) == 0)
        throw std::runtime_error("prime not invertible modulo phi");
    mpz_class next;
    mpz_powm(next.get_mpz_t(), value_.get_mpz_t(), inv.get_mpz_t(), key_->n.get_mpz_t());
    value_ = next;
}

void Accumulator::swap(const mpz_class& old_prime, const mpz_class& new_prime) {
    mpz_class inv;
    if (mpz_invert(inv.get_mpz_t(), old_prime.get_mpz_t(), key_->phi.get_mpz_t()) == 0)
        throw std::runtime_error("prime not invertible modulo phi");
    mpz_class e = (new_prime * inv) % key_->phi;
    mpz_class next;
    mpz_powm(next.get_mpz_t(), value_.get_mpz_t(), e.get_mpz_t(), key_->n.get_mpz_t());
    value_ = next;
}

bool WitnessProduct::divide(const mpz_class& prime) {
    if (!divides(prime)) return false;
    mpz_class q;
    mpz_divexact(q.get_mpz_t(), x_p_.get_mpz_t(), prime.get_mpz_t());
    x_p_ = q;
    return true;
}

bool WitnessProduct::divides(const mpz_class& prime) const {
    return mpz_divisible_p(x_p_.get_mpz_t(), prime.get_mpz_t()) != 0;
}

mpz_class WitnessProduct::witness(const mpz_class& n, const mpz_class& g,
                                  const mpz_class& prime) const {
    if (!divides(prime)) throw std::runtime_error("element not in accumulated product");
    mpz_class e;
    mpz_divexact(e.get_mpz_t(), x_p_.get_mpz_t(), prime.get_mpz_t());
    mpz_class w;
    mpz_powm(w.get_mpz_t(), g.get_mpz_t(), e.get_mpz_t(), n.get_mpz_t());
    return w;
}

bool verify_witness(const mpz_class& n, const mpz_class& witness, const mpz_class& prime,
                    const mpz_class& accumulator_value) {
    mpz_class lhs;
    mpz_powm(lhs.get_mpz_t(), witness.get_mpz_t(), prime.get_mpz_t(), n.get_mpz_t());
    return lhs == accumulator_value;
}

}  // namespace secgraph
