use proptest::prelude::*;

use locpir_core::codec::encrypt_cipher_word;
use locpir_core::dataset::encode_regions;
use locpir_core::{
    bitwise_and, encode_fixed, hom_add_xor, hom_comp_le, hom_comp_s, loc_pir, preprocess_services,
    read_dataset, CipherBit, Dataset, FixedPointFormat, GateEngine, NoiseSampler, PlainWord,
    SecretKey, ServiceCiphertext, TlweParams, WorkerPool, ZeroSampleSheet,
};

fn key() -> SecretKey {
    SecretKey::generate(TlweParams::sec80(), 21).unwrap()
}

fn engines(sk: &SecretKey) -> [GateEngine; 2] {
    [GateEngine::clear(), GateEngine::tlwe_oracle(sk.clone(), 22)]
}

fn lookup(dataset: &Dataset, lat: f64, lon: f64, engine: &GateEngine, sk: &SecretKey, seed: u64) -> u64 {
    let format = dataset.config.format;
    let m = dataset.config.m;
    let mut sampler = NoiseSampler::new(seed, sk.params().sigma);
    let mut sheet = ZeroSampleSheet::generate(sk, &mut sampler, dataset.records.len(), m);
    let services = preprocess_services(&dataset.service_values(), &mut sheet, m, engine).unwrap();
    assert!(sheet.is_consumed());
    let regions = encode_regions(&dataset.records, format, engine, services).unwrap();
    let x = encrypt_cipher_word(&encode_fixed(lat, format).unwrap(), sk, &mut sampler, engine).unwrap();
    let y = encrypt_cipher_word(&encode_fixed(lon, format).unwrap(), sk, &mut sampler, engine).unwrap();
    loc_pir(&x, &y, &regions, m, engine, &WorkerPool::new(3).unwrap())
        .unwrap()
        .reveal(sk)
        .unwrap()
}

#[test]
fn comparators_exhaustive_small_words() {
    let sk = key();
    let mut sampler = NoiseSampler::new(23, sk.params().sigma);
    for engine in engines(&sk) {
        for l in 2..=4u8 {
            let f = FixedPointFormat::new(l, 0).unwrap();
            for a in f.min_code()..=f.max_code() {
                let ca = encrypt_cipher_word(&PlainWord::from_code(a, f).unwrap(), &sk, &mut sampler, &engine).unwrap();
                for b in f.min_code()..=f.max_code() {
                    let cb = encrypt_cipher_word(&PlainWord::from_code(b, f).unwrap(), &sk, &mut sampler, &engine).unwrap();
                    assert_eq!(hom_comp_s(&ca, &cb, &engine).unwrap().reveal(&sk).unwrap(), a < b);
                    assert_eq!(hom_comp_le(&ca, &cb, &engine).unwrap().reveal(&sk).unwrap(), a <= b);
                }
            }
        }
    }
}

#[test]
fn bitwise_and_and_xor_accumulation() {
    let sk = key();
    for engine in engines(&sk) {
        let bits = |v: u64| ServiceCiphertext::new((0..4).map(|i| engine.constant(v >> i & 1 == 1)).collect());
        for flag in [false, true] {
            let masked = bitwise_and(&engine.constant(flag), &bits(0b1011), &engine).unwrap();
            assert_eq!(masked.reveal(&sk).unwrap(), if flag { 0b1011 } else { 0 });
        }
        let sum = hom_add_xor(&[bits(0b1100), bits(0b1010), bits(0b0001)], 4, &engine).unwrap();
        assert_eq!(sum.reveal(&sk).unwrap(), 0b0111);
        assert_eq!(hom_add_xor(&[], 4, &engine).unwrap().reveal(&sk).unwrap(), 0);
        assert!(hom_add_xor(&[bits(1)], 3, &engine).is_err());
    }
}

#[test]
fn half_open_box_edges() {
    let csv = "city,lat1,lat2,long1,long2,service\nA,10,11,20,21,5\nB,11,12,20,21,3\n";
    let dataset = read_dataset(csv.as_bytes(), FixedPointFormat::default(), None).unwrap();
    let sk = key();
    let cases = [
        ((10.0, 20.0), 5),
        ((10.5, 20.5), 5),
        ((11.0, 20.5), 3),
        ((12.0, 20.5), 0),
        ((10.5, 21.0), 0),
        ((9.9921875, 20.5), 0),
        ((10.5, 20.9921875), 5),
    ];
    for engine in engines(&sk) {
        for ((lat, lon), want) in cases {
            assert_eq!(dataset.lookup(lat, lon).unwrap(), want);
            assert_eq!(lookup(&dataset, lat, lon, &engine, &sk, 24), want, "({lat}, {lon})");
        }
    }
}

#[test]
fn mismatched_engines_are_rejected() {
    let sk = key();
    let oracle = GateEngine::tlwe_oracle(sk.clone(), 25);
    let clear = GateEngine::clear();
    let a = clear.constant(true);
    let mut sampler = NoiseSampler::new(26, sk.params().sigma);
    let b = CipherBit::Tlwe(sk.encrypt_bit(true, &mut sampler));
    assert!(oracle.and(&a, &b).is_err());
    assert!(clear.and(&a, &b).is_err());
}

prop_compose! {
    /// Disjoint boxes on a grid of 2-degree cells, each shrunk by a random
    /// margin, plus random query points.
    fn grid_boxes()(cells in proptest::collection::btree_set((0i32..6, 0i32..6), 1..6),
                    margins in proptest::collection::vec((0u8..8, 0u8..8), 6),
                    services in proptest::collection::vec(1u64..512, 6),
                    points in proptest::collection::vec((-2.0f64..14.0, 98.0f64..114.0), 4))
        -> (String, Vec<(f64, f64)>)
    {
        let mut csv = String::from("city,lat1,lat2,long1,long2,service\n");
        for (i, (r, c)) in cells.iter().enumerate() {
            let (ml, mh) = margins[i];
            let lat1 = 2.0 * *r as f64 + ml as f64 / 16.0;
            let lat2 = 2.0 * *r as f64 + 2.0 - mh as f64 / 16.0;
            let lon1 = 100.0 + 2.0 * *c as f64 + mh as f64 / 16.0;
            let lon2 = 100.0 + 2.0 * *c as f64 + 2.0 - ml as f64 / 16.0;
            csv.push_str(&format!("r{i},{lat1},{lat2},{lon1},{lon2},{}\n", services[i]));
        }
        (csv, points)
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lookup_matches_plaintext_oracle((csv, points) in grid_boxes(), seed in any::<u64>()) {
        let dataset = read_dataset(csv.as_bytes(), FixedPointFormat::default(), None).unwrap();
        let sk = key();
        for engine in engines(&sk) {
            for &(lat, lon) in &points {
                let want = dataset.lookup(lat, lon).unwrap();
                prop_assert_eq!(lookup(&dataset, lat, lon, &engine, &sk, seed), want);
            }
        }
    }
}
