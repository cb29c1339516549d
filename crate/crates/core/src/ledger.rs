//! Category-tagged cost accounting over protocol traces.
//!
//! Every subprocess of a protocol run is recorded as an event carrying a
//! per-category cost map: computation (bit operations), communication (bits
//! transmitted), information (milli-bits leaked through side channels), and
//! primitive invocations. Agents are anonymous indices; which index plays
//! which role is derived from the trace, never hard-coded. A security
//! vector summarizes the adversary-observable totals and flags whether any
//! observable subprocess straddles more than one category, in which case
//! the categories cannot be analyzed in isolation.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resource::bit_size;

/// Errors from ledger construction and the toy protocol.
#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("cost map must not be empty")]
    EmptyCosts,
    #[error("message {message} >= modulus {modulus}")]
    MessageTooLarge { message: u64, modulus: u64 },
    #[error("modulus bits must lie in 8..=64 (toy scale only)")]
    BadModulusBits,
    #[error("json: {0}")]
    Json(String),
}

/// The four cost categories. Units: Computation in bit operations,
/// Communication in bits transmitted, Information in milli-bits leaked,
/// Primitive in invocation counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "computation")]
    Computation,
    #[serde(rename = "communication")]
    Communication,
    #[serde(rename = "information_millibits")]
    Information,
    #[serde(rename = "primitive")]
    Primitive,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Computation,
        Category::Communication,
        Category::Information,
        Category::Primitive,
    ];

    /// The JSON/report key, which carries the unit for information costs.
    pub fn key(self) -> &'static str {
        match self {
            Category::Computation => "computation",
            Category::Communication => "communication",
            Category::Information => "information_millibits",
            Category::Primitive => "primitive",
        }
    }
}

/// Anonymous agent index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

/// One subprocess of a protocol run and what it cost, per category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEvent {
    pub agent: AgentId,
    pub subprocess: String,
    pub costs: BTreeMap<Category, u64>,
}

impl CostEvent {
    pub fn new(
        agent: AgentId,
        subprocess: impl Into<String>,
        costs: BTreeMap<Category, u64>,
    ) -> Result<Self, LedgerError> {
        if costs.is_empty() {
            return Err(LedgerError::EmptyCosts);
        }
        Ok(Self {
            agent,
            subprocess: subprocess.into(),
            costs,
        })
    }

    fn positive_categories(&self) -> usize {
        self.costs.values().filter(|&&v| v > 0).count()
    }
}

/// Append-only ordered sequence of cost events.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ledger {
    events: Vec<CostEvent>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append one event; earlier events are untouched.
    pub fn record(&mut self, event: CostEvent) -> Result<(), LedgerError> {
        if event.costs.is_empty() {
            return Err(LedgerError::EmptyCosts);
        }
        self.events.push(event);
        Ok(())
    }

    pub fn events(&self) -> &[CostEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LedgerError> {
        serde_json::from_str(text).map_err(|e| LedgerError::Json(e.to_string()))
    }
}

/// Per-category sums over all events; absent categories total 0.
pub fn category_totals(ledger: &Ledger) -> BTreeMap<Category, u64> {
    let mut totals: BTreeMap<Category, u64> = Category::ALL.iter().map(|&c| (c, 0)).collect();
    for event in ledger.events() {
        for (&category, &amount) in &event.costs {
            *totals.entry(category).or_insert(0) += amount;
        }
    }
    totals
}

/// The events whose cost map has positive amounts in two or more
/// categories: the places where categories interact and the analysis
/// cannot be decomposed.
pub fn interaction_events(ledger: &Ledger) -> Vec<&CostEvent> {
    ledger
        .events()
        .iter()
        .filter(|e| e.positive_categories() >= 2)
        .collect()
}

/// Whether any observable subprocess straddles categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionFlag {
    Decomposable,
    Interacting,
}

/// Adversary-observable per-category totals with the interaction flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityVector {
    pub totals: BTreeMap<Category, u64>,
    pub flag: InteractionFlag,
}

/// Restrict the ledger to observable events, total per category, and flag
/// whether any observable event interacts across categories.
pub fn security_vector(ledger: &Ledger, observable: impl Fn(&CostEvent) -> bool) -> SecurityVector {
    let mut totals: BTreeMap<Category, u64> = Category::ALL.iter().map(|&c| (c, 0)).collect();
    let mut interacting = false;
    for event in ledger.events().iter().filter(|e| observable(e)) {
        for (&category, &amount) in &event.costs {
            *totals.entry(category).or_insert(0) += amount;
        }
        interacting |= event.positive_categories() >= 2;
    }
    SecurityVector {
        totals,
        flag: if interacting {
            InteractionFlag::Interacting
        } else {
            InteractionFlag::Decomposable
        },
    }
}

/// Bits that distinguish messages through a deterministic timing channel:
/// log2 of the number of distinct durations over the message space.
pub fn timing_leak_bits(
    timing_model: impl Fn(u64) -> u64,
    message_space: impl IntoIterator<Item = u64>,
) -> f64 {
    let durations: BTreeSet<u64> = message_space.into_iter().map(timing_model).collect();
    if durations.is_empty() {
        return 0.0;
    }
    (durations.len() as f64).log2()
}

/// Plain bit length, 0 for 0: the duration model of the deliberately leaky
/// toy encryption (the time a bit-serial encryptor spends scanning the
/// plaintext).
pub fn bitlen_timing(message: u64) -> u64 {
    if message == 0 {
        0
    } else {
        u64::from(u64::BITS - message.leading_zeros())
    }
}

/// The public record of one toy protocol run. Private key material stays
/// out of the transcript.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    pub modulus: u64,
    pub public_exponent: u64,
    pub ciphertext: u64,
    pub decrypted: u64,
}

/// Which anonymous index acts in which role, derived from the trace: the
/// key owner is the agent that invoked primitives, the sender the agent
/// whose computation leaked timing information. The eavesdropper is not an
/// index at all; it is whoever reads the communication-category flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleReport {
    pub key_owner: AgentId,
    pub message_sender: AgentId,
}

/// Derive roles from cost structure alone.
pub fn derive_roles(ledger: &Ledger) -> Option<RoleReport> {
    let key_owner = ledger
        .events()
        .iter()
        .find(|e| e.costs.get(&Category::Primitive).copied().unwrap_or(0) > 0)?
        .agent;
    let message_sender = ledger
        .events()
        .iter()
        .find(|e| e.costs.get(&Category::Information).copied().unwrap_or(0) > 0)?
        .agent;
    Some(RoleReport {
        key_owner,
        message_sender,
    })
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Square-and-multiply, counting modular multiplications into `muls`.
fn modexp(mut base: u64, mut exp: u64, modulus: u64, muls: &mut u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, modulus);
            *muls += 1;
        }
        base = mulmod(base, base, modulus);
        *muls += 1;
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for u64 with this base set.
fn is_prime(n: u64, muls: &mut u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = modexp(a, d, n, muls);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mulmod(x, x, n);
            *muls += 1;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Modular inverse by extended Euclid; `a` and `m` must be coprime.
fn modinv(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quotient = old_r / r;
        (old_r, r) = (r, old_r - quotient * r);
        (old_s, s) = (s, old_s - quotient * s);
    }
    old_s.rem_euclid(m as i128) as u64
}

/// Draw a prime with exactly `bits` bits; returns (prime, draws made).
fn random_prime(bits: u32, rng: &mut ChaCha8Rng, muls: &mut u64) -> (u64, u64) {
    let lo = 1u64 << (bits - 1);
    let hi = (1u64 << bits) - 1;
    let mut draws = 0;
    loop {
        draws += 1;
        let candidate = rng.gen_range(lo..=hi) | 1;
        if is_prime(candidate, muls) {
            return (candidate, draws);
        }
    }
}

/// Execute the textbook public-key exchange at toy scale and ledger every
/// subprocess: key generation (computation + primitive draws), the two
/// transmissions (communication), encryption (computation + the timing-model
/// information leak), and decryption (computation).
///
/// The decrypted output equals the message; callers get both the trace and
/// the public transcript.
pub fn run_toy_rsa(
    modulus_bits: u32,
    message: u64,
    seed: u64,
) -> Result<(Ledger, Transcript), LedgerError> {
    if !(8..=64).contains(&modulus_bits) {
        return Err(LedgerError::BadModulusBits);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // keygen: two distinct half-size primes
    let p_bits = modulus_bits.div_ceil(2);
    let q_bits = modulus_bits / 2;
    let mut keygen_muls = 0u64;
    let (p, draws_p) = random_prime(p_bits, &mut rng, &mut keygen_muls);
    let (q, draws_q) = {
        let mut total_draws = 0;
        loop {
            let (candidate, draws) = random_prime(q_bits, &mut rng, &mut keygen_muls);
            total_draws += draws;
            if candidate != p {
                break (candidate, total_draws);
            }
        }
    };
    let modulus = p * q;
    if message >= modulus {
        return Err(LedgerError::MessageTooLarge { message, modulus });
    }
    let phi = (p - 1) * (q - 1);
    let public_exponent = [3u64, 5, 17, 257, 65537]
        .into_iter()
        .find(|&e| e < phi && gcd(e, phi) == 1)
        .or_else(|| (3..phi).step_by(2).find(|&e| gcd(e, phi) == 1))
        .expect("phi > 4 at toy scale");
    let private_exponent = modinv(public_exponent, phi);

    let bits = u64::from(bit_size(modulus));
    let mut ledger = Ledger::new();
    let key_owner = AgentId(0);
    let sender = AgentId(1);

    ledger.record(CostEvent::new(
        key_owner,
        "keygen",
        [
            (Category::Computation, keygen_muls * bits * bits),
            (Category::Primitive, draws_p + draws_q),
        ]
        .into(),
    )?)?;

    ledger.record(CostEvent::new(
        key_owner,
        "send_public_key",
        [(
            Category::Communication,
            u64::from(bit_size(modulus) + bit_size(public_exponent)),
        )]
        .into(),
    )?)?;

    let mut enc_muls = 0u64;
    let ciphertext = modexp(message, public_exponent, modulus, &mut enc_muls);
    // deterministic timing channel: duration = plaintext bit length, so the
    // leak is the entropy of the distinguishable duration classes
    let duration_classes = bitlen_timing(modulus - 1) + 1;
    let leak_millibits = (1000.0 * (duration_classes as f64).log2()).round() as u64;
    ledger.record(CostEvent::new(
        sender,
        "encrypt",
        [
            (Category::Computation, enc_muls * bits * bits),
            (Category::Information, leak_millibits),
        ]
        .into(),
    )?)?;

    ledger.record(CostEvent::new(
        sender,
        "send_ciphertext",
        [(Category::Communication, u64::from(bit_size(modulus)))].into(),
    )?)?;

    let mut dec_muls = 0u64;
    let decrypted = modexp(ciphertext, private_exponent, modulus, &mut dec_muls);
    ledger.record(CostEvent::new(
        key_owner,
        "decrypt",
        [(Category::Computation, dec_muls * bits * bits)].into(),
    )?)?;

    Ok((
        ledger,
        Transcript {
            modulus,
            public_exponent,
            ciphertext,
            decrypted,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn event(agent: u32, name: &str, costs: &[(Category, u64)]) -> CostEvent {
        CostEvent::new(AgentId(agent), name, costs.iter().copied().collect()).unwrap()
    }

    #[test]
    fn record_appends_in_order() {
        let mut ledger = Ledger::new();
        ledger
            .record(event(0, "first", &[(Category::Computation, 3)]))
            .unwrap();
        assert_eq!(ledger.len(), 1);
        ledger
            .record(event(1, "second", &[(Category::Communication, 2)]))
            .unwrap();
        assert_eq!(ledger.events()[0].subprocess, "first");
        assert_eq!(ledger.events()[1].subprocess, "second");
    }

    #[test]
    fn empty_costs_rejected() {
        // amounts are unsigned by construction, so the runtime invariant
        // left to check is non-emptiness
        assert_eq!(
            CostEvent::new(AgentId(0), "nothing", BTreeMap::new()).unwrap_err(),
            LedgerError::EmptyCosts
        );
    }

    #[test]
    fn totals_examples() {
        let empty = Ledger::new();
        assert!(category_totals(&empty).values().all(|&v| v == 0));
        assert_eq!(category_totals(&empty).len(), 4);

        let mut ledger = Ledger::new();
        ledger
            .record(event(0, "a", &[(Category::Computation, 3)]))
            .unwrap();
        ledger
            .record(event(
                0,
                "b",
                &[(Category::Computation, 4), (Category::Communication, 2)],
            ))
            .unwrap();
        let totals = category_totals(&ledger);
        assert_eq!(totals[&Category::Computation], 7);
        assert_eq!(totals[&Category::Communication], 2);
        assert_eq!(totals[&Category::Information], 0);
        assert_eq!(totals[&Category::Primitive], 0);
    }

    #[test]
    fn interaction_examples() {
        let mut ledger = Ledger::new();
        ledger
            .record(event(0, "encrypt_local", &[(Category::Computation, 5)]))
            .unwrap();
        ledger
            .record(event(
                1,
                "leaky_send",
                &[(Category::Communication, 128), (Category::Information, 10)],
            ))
            .unwrap();
        // a zero entry does not make an event interacting
        ledger
            .record(event(
                0,
                "zero_padded",
                &[(Category::Computation, 5), (Category::Information, 0)],
            ))
            .unwrap();
        let interacting = interaction_events(&ledger);
        assert_eq!(interacting.len(), 1);
        assert_eq!(interacting[0].subprocess, "leaky_send");
        assert!(interaction_events(&Ledger::new()).is_empty());
    }

    #[test]
    fn toy_rsa_round_trip() {
        let (ledger, transcript) = run_toy_rsa(32, 42, 7).unwrap();
        assert_eq!(transcript.decrypted, 42);
        assert!(transcript.ciphertext < transcript.modulus);
        // spans at least three categories
        let totals = category_totals(&ledger);
        let spanned = totals.values().filter(|&&v| v > 0).count();
        assert!(spanned >= 3, "{totals:?}");
        // the encrypt event interacts (computation + information)
        assert!(interaction_events(&ledger)
            .iter()
            .any(|e| e.subprocess == "encrypt"));
    }

    #[test]
    fn toy_rsa_rejects_bad_arguments() {
        assert_eq!(
            run_toy_rsa(65, 1, 0).unwrap_err(),
            LedgerError::BadModulusBits
        );
        assert_eq!(
            run_toy_rsa(7, 1, 0).unwrap_err(),
            LedgerError::BadModulusBits
        );
        let err = run_toy_rsa(8, u64::MAX, 0).unwrap_err();
        assert!(matches!(err, LedgerError::MessageTooLarge { .. }));
    }

    #[test]
    fn toy_rsa_is_seed_deterministic() {
        let (ledger_a, t_a) = run_toy_rsa(24, 99, 13).unwrap();
        let (ledger_b, t_b) = run_toy_rsa(24, 99, 13).unwrap();
        assert_eq!(ledger_a, ledger_b);
        assert_eq!(t_a, t_b);
    }

    #[test]
    fn timing_leak_examples() {
        // constant timing: one class, no leak
        assert_eq!(timing_leak_bits(|_| 17, 0..256), 0.0);
        // bit-length timing over a byte: durations 0..=8
        let leak = timing_leak_bits(bitlen_timing, 0..256);
        assert_eq!(leak, (9f64).log2());
        // injective timing: full leak
        let leak = timing_leak_bits(|m| m, 0..64);
        assert_eq!(leak, 6.0);
    }

    #[test]
    fn timing_leak_matches_class_count_oracle() {
        let spaces: [Vec<u64>; 3] = [
            (0..256).collect(),
            (10..50).collect(),
            vec![1, 2, 4, 8, 16, 32],
        ];
        for space in spaces {
            let mut distinct = BTreeSet::new();
            for &m in &space {
                distinct.insert(bitlen_timing(m));
            }
            let expected = (distinct.len() as f64).log2();
            assert_eq!(
                timing_leak_bits(bitlen_timing, space.iter().copied()),
                expected
            );
        }
    }

    #[test]
    fn security_vector_examples() {
        let (ledger, _) = run_toy_rsa(32, 42, 7).unwrap();

        // nothing observable: zero vector, decomposable
        let blind = security_vector(&ledger, |_| false);
        assert!(blind.totals.values().all(|&v| v == 0));
        assert_eq!(blind.flag, InteractionFlag::Decomposable);

        // the eavesdropper's surface: transmissions plus encrypt timing
        let eve = security_vector(&ledger, |e| {
            e.costs.get(&Category::Communication).copied().unwrap_or(0) > 0
                || e.costs.get(&Category::Information).copied().unwrap_or(0) > 0
        });
        assert!(eve.totals[&Category::Information] > 0);
        assert_eq!(eve.flag, InteractionFlag::Interacting);

        // restriction never exceeds the unrestricted totals
        let all = category_totals(&ledger);
        for (category, amount) in &eve.totals {
            assert!(amount <= &all[category]);
        }
    }

    #[test]
    fn roles_are_derived_not_hard_coded() {
        let (ledger, _) = run_toy_rsa(24, 5, 3).unwrap();
        let roles = derive_roles(&ledger).unwrap();
        assert_eq!(roles.key_owner, AgentId(0));
        assert_eq!(roles.message_sender, AgentId(1));

        // same protocol with the indices swapped derives swapped roles
        let mut swapped = Ledger::new();
        for e in ledger.events() {
            let mut clone = e.clone();
            clone.agent = AgentId(1 - e.agent.0);
            swapped.record(clone).unwrap();
        }
        let roles = derive_roles(&swapped).unwrap();
        assert_eq!(roles.key_owner, AgentId(1));
        assert_eq!(roles.message_sender, AgentId(0));
    }

    #[test]
    fn ledger_json_schema() {
        let (ledger, _) = run_toy_rsa(16, 3, 1).unwrap();
        let value: serde_json::Value = serde_json::from_str(&ledger.to_json()).unwrap();
        let events = value.as_array().unwrap();
        assert_eq!(events.len(), 5);
        let keygen = &events[0];
        assert_eq!(keygen["agent"], 0);
        assert_eq!(keygen["subprocess"], "keygen");
        assert!(keygen["costs"]["computation"].is_u64());
        assert!(keygen["costs"]["primitive"].is_u64());
        // absent keys mean zero
        assert!(keygen["costs"].get("communication").is_none());
        let send = &events[1];
        assert!(send["costs"]["communication"].is_u64());
        let encrypt = &events[2];
        assert!(encrypt["costs"]["information_millibits"].is_u64());

        let back = Ledger::from_json(&ledger.to_json()).unwrap();
        assert_eq!(back, ledger);
    }

    proptest! {
        #[test]
        fn totals_are_additive_under_concatenation(
            costs_a in prop::collection::vec((0u8..4, 0u64..1000), 1..8),
            costs_b in prop::collection::vec((0u8..4, 0u64..1000), 1..8),
        ) {
            let to_ledger = |costs: &[(u8, u64)]| {
                let mut ledger = Ledger::new();
                for (i, &(cat, amount)) in costs.iter().enumerate() {
                    let category = Category::ALL[cat as usize];
                    ledger
                        .record(event(i as u32 % 2, "op", &[(category, amount)]))
                        .unwrap();
                }
                ledger
            };
            let a = to_ledger(&costs_a);
            let b = to_ledger(&costs_b);
            let mut joined = a.clone();
            for e in b.events() {
                joined.record(e.clone()).unwrap();
            }
            let ta = category_totals(&a);
            let tb = category_totals(&b);
            let tj = category_totals(&joined);
            for category in Category::ALL {
                prop_assert_eq!(tj[&category], ta[&category] + tb[&category]);
            }
        }

        #[test]
        fn interaction_subset_and_flag_agree(
            events_spec in prop::collection::vec(
                prop::collection::btree_map(0u8..4, 0u64..50, 1..4),
                0..10,
            ),
        ) {
            let mut ledger = Ledger::new();
            for (i, spec) in events_spec.iter().enumerate() {
                let costs: BTreeMap<Category, u64> = spec
                    .iter()
                    .map(|(&c, &v)| (Category::ALL[c as usize], v))
                    .collect();
                ledger
                    .record(CostEvent::new(AgentId(i as u32), "op", costs).unwrap())
                    .unwrap();
            }
            let interacting = interaction_events(&ledger);
            for e in &interacting {
                prop_assert!(ledger.events().iter().any(|le| le == *e));
                prop_assert!(e.positive_categories() >= 2);
            }
            let vector = security_vector(&ledger, |_| true);
            prop_assert_eq!(
                vector.flag == InteractionFlag::Interacting,
                !interacting.is_empty()
            );
        }

        #[test]
        fn toy_rsa_random_messages_round_trip(message in 0u64..30_000, seed in 0u64..1000) {
            let (_, transcript) = run_toy_rsa(16, message % 16_384, seed).unwrap();
            prop_assert_eq!(transcript.decrypted, message % 16_384);
        }
    }
}
