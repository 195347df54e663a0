use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::Arc;

use locpir_core::protocol::{
    client_decrypt_response, client_preprocess, client_query, serve, Client, ErrorCode, Frame,
    Loopback, MsgType, ServerContext, SessionPhase, TcpTransport, Transport,
};
use locpir_core::{
    load_dataset, Dataset, EngineKind, FixedPointFormat, GateEngine, GeoCoordinate, NoiseSampler,
    SecretKey, TlweParams,
};

fn table1() -> Dataset {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/kdca_2021-10-26.csv");
    load_dataset(path, FixedPointFormat::default(), None).unwrap()
}

fn oracle_context(sk: &SecretKey, threads: usize) -> ServerContext {
    let engine = GateEngine::tlwe_oracle(sk.clone(), 17);
    ServerContext::new(table1(), *sk.params(), engine, threads).unwrap()
}

#[test]
fn busan_lookup_over_loopback() {
    let sk = SecretKey::generate(TlweParams::sec80(), 1).unwrap();
    let ctx = oracle_context(&sk, 2);
    let mut client = Client::new(Loopback::new(&ctx), sk, 2);
    let params = client.handshake().unwrap();
    assert_eq!((params.regions, params.m, params.engine), (9, 9, EngineKind::TlweOracle));
    assert_eq!(params.phase, SessionPhase::AwaitingSheet);
    assert_eq!(client.upload_sheet().unwrap().phase, SessionPhase::Ready);
    assert_eq!(client.query(GeoCoordinate::new(35.19, 129.0).unwrap()).unwrap(), 33);
    // Several queries reuse one sheet.
    assert_eq!(client.query(GeoCoordinate::new(37.55, 126.99).unwrap()).unwrap(), 427);
    assert_eq!(client.query(GeoCoordinate::new(0.0, 0.0).unwrap()).unwrap(), 0);
}

#[test]
fn clear_engine_round_trip() {
    let sk = SecretKey::generate(TlweParams::sec128(), 3).unwrap();
    let ctx = ServerContext::new(table1(), TlweParams::sec128(), GateEngine::clear(), 1).unwrap();
    let mut client = Client::new(Loopback::new(&ctx), sk, 4);
    client.upload_sheet().unwrap();
    assert_eq!(client.query(GeoCoordinate::new(35.19, 129.0).unwrap()).unwrap(), 33);
}

#[test]
fn out_of_order_frames_are_rejected_without_state_change() {
    let sk = SecretKey::generate(TlweParams::sec80(), 5).unwrap();
    let ctx = oracle_context(&sk, 1);
    let mut sampler = NoiseSampler::new(6, sk.params().sigma);
    let coord = GeoCoordinate::new(35.19, 129.0).unwrap();
    let query = client_query(coord, &sk, &mut sampler, FixedPointFormat::default(), EngineKind::TlweOracle).unwrap();
    let sheet = client_preprocess(&sk, &mut sampler, 9, 9);
    let mut lb = Loopback::new(&ctx);

    let reply = lb.exchange(&Frame::new(MsgType::Query, query.clone())).unwrap();
    assert_eq!(reply.as_error().unwrap().code, ErrorCode::Phase);
    assert_eq!(lb.session().phase(), SessionPhase::AwaitingSheet);

    let reply = lb.exchange(&Frame::new(MsgType::ZeroSheet, sheet[..100].to_vec())).unwrap();
    assert!(reply.as_error().is_some());
    assert_eq!(lb.session().phase(), SessionPhase::AwaitingSheet);

    let reply = lb.exchange(&Frame::new(MsgType::ZeroSheet, sheet.clone())).unwrap();
    assert_eq!(reply.msg_type, MsgType::Params);
    assert_eq!(lb.session().phase(), SessionPhase::Ready);

    let reply = lb.exchange(&Frame::new(MsgType::ZeroSheet, sheet)).unwrap();
    assert_eq!(reply.as_error().unwrap().code, ErrorCode::Phase);

    let reply = lb.exchange(&Frame::new(MsgType::Query, query[..query.len() - 4].to_vec())).unwrap();
    assert_eq!(reply.as_error().unwrap().code, ErrorCode::Length);

    let reply = lb.exchange(&Frame::new(MsgType::Query, query)).unwrap();
    assert_eq!(reply.msg_type, MsgType::Response);
    assert_eq!(client_decrypt_response(&reply.payload, &sk, 9).unwrap(), 33);
}

#[test]
fn wrong_key_decrypts_to_coin_flips() {
    let params = TlweParams::sec80();
    let sk = SecretKey::generate(params, 7).unwrap();
    let other = SecretKey::generate(params, 8).unwrap();
    let mut sampler = NoiseSampler::new(9, params.sigma);
    let trials = 4000;
    let agree = (0..trials)
        .filter(|i| {
            let bit = i % 3 == 0;
            other.decrypt_bit(&sk.encrypt_bit(bit, &mut sampler)).unwrap() == bit
        })
        .count();
    let rate = agree as f64 / trials as f64;
    assert!((0.45..0.55).contains(&rate), "agreement {rate}");
}

#[test]
fn query_bytes_look_uniform() {
    let sk = SecretKey::generate(TlweParams::sec80(), 10).unwrap();
    let mut sampler = NoiseSampler::new(11, sk.params().sigma);
    let coord = GeoCoordinate::new(35.19, 129.0).unwrap();
    let payload = client_query(coord, &sk, &mut sampler, FixedPointFormat::default(), EngineKind::TlweOracle).unwrap();

    let mut hist = [0u64; 256];
    for &b in &payload {
        hist[b as usize] += 1;
    }
    let expected = payload.len() as f64 / 256.0;
    let chi2: f64 = hist.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 255 degrees of freedom; 330.5 is the 0.1% critical value.
    assert!(chi2 < 330.5, "chi-square {chi2}");

    for needle in [&35.19f64.to_le_bytes()[..], &129.0f64.to_le_bytes()[..], b"35.19", b"129.0"] {
        assert!(!payload.windows(needle.len()).any(|w| w == needle));
    }
}

#[test]
fn tcp_round_trip() {
    let sk = SecretKey::generate(TlweParams::sec80(), 12).unwrap();
    let ctx = Arc::new(oracle_context(&sk, 2));
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || serve(listener, ctx));

    let handles: Vec<_> = [(35.19, 129.0, 33), (33.4, 126.5, 6)]
        .into_iter()
        .enumerate()
        .map(|(i, (lat, lon, want))| {
            let sk = sk.clone();
            std::thread::spawn(move || {
                let mut client = Client::new(TcpTransport::connect(addr).unwrap(), sk, 100 + i as u64);
                client.upload_sheet().unwrap();
                assert_eq!(client.query(GeoCoordinate::new(lat, lon).unwrap()).unwrap(), want);
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
}

#[test]
fn garbage_header_gets_error_frame() {
    let sk = SecretKey::generate(TlweParams::sec80(), 13).unwrap();
    let ctx = oracle_context(&sk, 1);
    let mut session = ctx.new_session();
    let reply = session.handle_bytes(&ctx, b"NOPE\x01\x00\x01\x00\x00\x00\x00");
    assert_eq!(reply.as_error().unwrap().code, ErrorCode::Header);
    assert_eq!(session.phase(), SessionPhase::AwaitingSheet);
}
