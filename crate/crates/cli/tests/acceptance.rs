//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;
mod procs;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use whtmlgate_core::bench::{self, BenchConfig};
use whtmlgate_core::envelope::{self, SecureEnvelope, SessionKey};
use whtmlgate_core::gateway::{self, GatewayConfig, Mode, Request};
use whtmlgate_core::markup::{check_well_formed, parse, tokenize, TagRegistry, TokenKind, WellFormednessError};
use whtmlgate_core::media::{bitmap_to_bmp, bmp_to_bitmap, decode_mbi, decode_wbmp, encode_mbi, encode_wbmp, Bitmap};
use whtmlgate_core::projector::{project, serialize, Target};
use whtmlgate_core::wmls::{self, decode_module, encode_module, parse_program, ScriptSource};

use oracles::interp::{self, RefValue};
use oracles::matcher::{self, Verdict};

const WF_STREAMS: usize = 10_000;
const WF_MAX_DEPTH: usize = 50;
const WF_MAX_LEN: usize = 10_000;
const WF_TIME_LIMIT: Duration = Duration::from_secs(10);
const PURITY_DOCS: usize = 1_000;
const SCRIPT_REQUESTS: usize = 100;
const SCRIPT_CORPUS: usize = 50;
const MBI_EXHAUSTIVE: u32 = 1 << 20;
const CODEC_SAMPLES: usize = 1_000;
const CODEC_MAX_SIDE: u32 = 16;
const BENCH_TIME_LIMIT: Duration = Duration::from_secs(60);
const PROJECTION_RATIO_BOUND: f64 = 5.0;
const RELAY_RATIO_BOUND: f64 = 2.0;
const T: Duration = Duration::from_secs(30);

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn verdict(r: &Result<(), WellFormednessError>) -> Verdict {
    match r {
        Ok(()) => Verdict::Ok,
        Err(e @ WellFormednessError::MismatchedEndTag { .. }) => Verdict::Mismatch(e.position().byte_offset),
        Err(e @ WellFormednessError::StrayEndTag { .. }) => Verdict::Stray(e.position().byte_offset),
        Err(e @ WellFormednessError::UnclosedTags(_)) => Verdict::Unclosed(e.position().byte_offset),
    }
}

fn wellformedness_oracle() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    let streams: Vec<_> = (0..WF_STREAMS)
        .map(|_| oracles::streams::random_stream(&mut rng, WF_MAX_DEPTH, WF_MAX_LEN))
        .collect();
    let longest = streams.iter().map(Vec::len).max().unwrap_or(0);
    let deepest = streams.iter().map(|s| oracles::streams::nesting_depth(s)).max().unwrap_or(0);
    ensure(longest <= WF_MAX_LEN && deepest <= WF_MAX_DEPTH, || {
        format!("generator exceeded bounds: len {longest}, depth {deepest}")
    })?;

    let started = Instant::now();
    let mut disagreements = 0;
    let mut invalid = 0;
    for s in &streams {
        let got = verdict(&check_well_formed(s));
        let want = matcher::check(&matcher::from_tokens(s));
        if got != want {
            disagreements += 1;
        }
        if want != Verdict::Ok {
            invalid += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure(disagreements == 0, || format!("{disagreements} of {WF_STREAMS} streams disagree"))?;
    ensure(elapsed < WF_TIME_LIMIT, || format!("took {elapsed:?}, limit {WF_TIME_LIMIT:?}"))?;
    Ok(format!(
        "{WF_STREAMS}/{WF_STREAMS} agree on verdict and position ({invalid} ill-formed, longest {longest}, deepest {deepest}) in {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn projection_purity() -> Result<String, String> {
    let reg = TagRegistry::default();
    let gen = oracles::documents::DocGen::new(&reg);
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let mut violations = 0;
    for _ in 0..PURITY_DOCS {
        let src = gen.document(&mut rng);
        let doc = parse(src.as_bytes(), &reg).map_err(|e| format!("generated doc rejected: {e}\n{src}"))?;
        for (target, forbidden) in [(Target::Wml, reg.html_only()), (Target::Html, reg.wml_only())] {
            let out = serialize(&project(&doc, target).map_err(|e| e.to_string())?);
            let tokens = tokenize(&out).map_err(|e| format!("projection does not re-tokenize: {e}"))?;
            check_well_formed(&tokens).map_err(|e| format!("projection not well-formed: {e}"))?;
            for (i, t) in tokens.iter().enumerate() {
                if let TokenKind::StartTag { name, .. } | TokenKind::EmptyTag { name, .. } = &t.kind {
                    if i > 0 && forbidden.contains(name.as_str()) {
                        violations += 1;
                    }
                }
            }
        }
    }
    ensure(violations == 0, || format!("{violations} foreign tags in projections"))?;
    Ok(format!("{PURITY_DOCS} documents, both profiles, 0 foreign tags"))
}

fn security_gap() -> Result<String, String> {
    let client_key = SessionKey::pre_shared(b"handset".to_vec()).map_err(|e| e.to_string())?;
    let server_key = SessionKey::pre_shared(b"webserver".to_vec()).map_err(|e| e.to_string())?;
    let payload: Vec<u8> = (0..100u8).collect();
    let request_plain = b"account=42".to_vec();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    fs::write(dir.path().join("bank.txt"), &payload).map_err(|e| e.to_string())?;

    // Legacy: the gateway terminates both sessions.
    let origin = support::spawn_origin(dir.path(), Some(server_key.clone()));
    let mut cfg = GatewayConfig::new(origin, dir.path().join("c1"));
    cfg.mode = Mode::Legacy;
    cfg.client_key = Some(client_key.clone());
    cfg.server_key = Some(server_key);
    let (legacy, addr) = support::spawn_gateway(cfg);
    let env = envelope::seal(&client_key, 1, &request_plain).to_bytes();
    let r = gateway::send(&addr, &Request::get("waps://bank/bank.txt").with_body(envelope::CONTENT_TYPE, env), T)
        .map_err(|e| e.to_string())?;
    ensure(r.status == 200, || format!("legacy status {}", r.status))?;
    let got = envelope::open(&client_key, &SecureEnvelope::from_bytes(&r.body).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(got == payload, || "legacy response plaintext differs".into())?;
    let expected = (request_plain.len() + payload.len()) as u64;
    let observed = legacy.audit().secure_plaintext_total();
    ensure(observed == expected && observed > 0, || format!("legacy observed {observed}, expected {expected}"))?;

    // Passthrough: the same request, end to end between client and origin.
    let origin = support::spawn_origin(dir.path(), Some(client_key.clone()));
    let (pass, addr) = support::spawn_gateway(GatewayConfig::new(origin, dir.path().join("c2")));
    let env = envelope::seal(&client_key, 1, &request_plain).to_bytes();
    let r = gateway::send(&addr, &Request::get("waps://bank/bank.txt").with_body(envelope::CONTENT_TYPE, env), T)
        .map_err(|e| e.to_string())?;
    ensure(r.status == 200, || format!("passthrough status {}", r.status))?;
    let got = envelope::open(&client_key, &SecureEnvelope::from_bytes(&r.body).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(got == payload, || "passthrough response plaintext differs".into())?;
    let observed = pass.audit().secure_plaintext_total();
    ensure(observed == 0 && pass.decrypt_calls() == 0, || {
        format!("passthrough observed {observed} bytes, {} opens", pass.decrypt_calls())
    })?;

    // Bit-identical relay of whatever the origin emits.
    let blob: Vec<u8> = (0..1024u32).map(|i| (i * 7 % 256) as u8).collect();
    fs::write(dir.path().join("blob.senv"), &blob).map_err(|e| e.to_string())?;
    let plain_origin = support::spawn_origin(dir.path(), None);
    let direct = gateway::send(&plain_origin, &Request::get("/blob.senv"), T).map_err(|e| e.to_string())?;
    let (pass2, addr) = support::spawn_gateway(GatewayConfig::new(plain_origin, dir.path().join("c3")));
    let r = gateway::send(
        &addr,
        &Request::get("waps://x/blob.senv").with_body(envelope::CONTENT_TYPE, vec![0xAB; 1024]),
        T,
    )
    .map_err(|e| e.to_string())?;
    ensure(r.raw.raw == direct.raw.raw, || "relayed bytes differ from origin bytes".into())?;
    ensure(pass2.audit().secure_plaintext_total() == 0 && pass2.decrypt_calls() == 0, || {
        "opaque relay observed plaintext".into()
    })?;
    Ok(format!("legacy observed {expected} plaintext bytes (= {} + {}), passthrough 0 with bit-identical relay", request_plain.len(), payload.len()))
}

fn bytecode_reuse() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    fs::write(
        dir.path().join("fact.wmls"),
        "function f(n) { if (n <= 1) return 1; return n * f(n-1); }",
    )
    .map_err(|e| e.to_string())?;
    let origin = support::spawn_origin(dir.path(), None);
    let (gw, addr) = support::spawn_gateway(GatewayConfig::new(origin, dir.path().join("cache")));
    let mut bodies = Vec::with_capacity(SCRIPT_REQUESTS);
    for _ in 0..SCRIPT_REQUESTS {
        let r = gateway::send(&addr, &Request::get("wap://o/fact.wmls"), T).map_err(|e| e.to_string())?;
        ensure(r.status == 200, || format!("status {}", r.status))?;
        bodies.push(r.body);
    }
    let compiles = gw.cache().compile_count();
    ensure(compiles == 1, || format!("{compiles} compilations for {SCRIPT_REQUESTS} requests"))?;
    ensure(bodies.iter().all(|b| *b == bodies[0]), || "served bytecode differs".into())?;

    let corpus = oracles::scripts::corpus(SCRIPT_CORPUS, 0x5eed_0004);
    let mut mismatches = Vec::new();
    for (i, case) in corpus.iter().enumerate() {
        let fresh = wmls::compile(&ScriptSource::new(case.source.as_str())).map_err(|e| e.to_string())?;
        let decoded = decode_module(&encode_module(&fresh)).map_err(|e| e.to_string())?;
        let program = parse_program(&case.source).map_err(|e| e.to_string())?;
        let want = interp::run(&program, case.entry, case.args.iter().map(RefValue::from_value).collect());
        let a = interp::normalize(wmls::execute(&fresh, case.entry, &case.args, 10_000_000));
        let b = interp::normalize(wmls::execute(&decoded, case.entry, &case.args, 10_000_000));
        if a.as_ref().ok() != Some(&want) || b.as_ref().ok() != Some(&want) {
            mismatches.push(i);
        }
    }
    ensure(mismatches.is_empty(), || format!("scripts {mismatches:?} disagree with the interpreter"))?;
    Ok(format!(
        "{SCRIPT_REQUESTS} requests -> 1 compile, identical .wbc; {SCRIPT_CORPUS}/{SCRIPT_CORPUS} scripts match the interpreter"
    ))
}

fn codec_exactness() -> Result<String, String> {
    let bm = |w, h, px: &[bool]| Bitmap::new(w, h, px.to_vec()).map_err(|e| e.to_string());
    let vectors: Vec<(Bitmap, Vec<u8>)> = vec![
        (bm(1, 1, &[true])?, vec![0x00, 0x00, 0x01, 0x01, 0x80]),
        (bm(2, 1, &[false, true])?, vec![0x00, 0x00, 0x02, 0x01, 0x40]),
        (bm(9, 1, &[true; 9])?, vec![0x00, 0x00, 0x09, 0x01, 0xFF, 0x80]),
    ];
    for (img, bytes) in &vectors {
        ensure(encode_wbmp(img) == *bytes, || format!("encode mismatch for {bytes:02X?}"))?;
        ensure(decode_wbmp(bytes).as_ref() == Ok(img), || format!("decode mismatch for {bytes:02X?}"))?;
    }
    ensure(encode_mbi(0) == [0x00] && encode_mbi(127) == [0x7F] && encode_mbi(200) == [0x81, 0x48], || {
        "MBI vectors".into()
    })?;
    ensure(decode_mbi(&[0x81, 0x48], 0) == Ok((200, 2)) && decode_mbi(&[0x80], 0).is_err(), || {
        "MBI decode vectors".into()
    })?;

    let mut mbi_bad = 0u32;
    for n in 0..MBI_EXHAUSTIVE {
        let e = encode_mbi(n);
        if decode_mbi(&e, 0) != Ok((n, e.len())) {
            mbi_bad += 1;
        }
    }
    ensure(mbi_bad == 0, || format!("{mbi_bad} MBI round-trip failures"))?;

    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    let mut codec_bad = 0;
    for _ in 0..CODEC_SAMPLES {
        let (w, h) = (rng.gen_range(1..=CODEC_MAX_SIDE), rng.gen_range(1..=CODEC_MAX_SIDE));
        let px: Vec<bool> = (0..w * h).map(|_| rng.gen()).collect();
        let img = bm(w, h, &px)?;
        let wbmp_ok = decode_wbmp(&encode_wbmp(&img)).as_ref() == Ok(&img);
        let bmp_ok = bmp_to_bitmap(&bitmap_to_bmp(&img), 128).as_ref() == Ok(&img);
        if !(wbmp_ok && bmp_ok) {
            codec_bad += 1;
        }
    }
    ensure(codec_bad == 0, || format!("{codec_bad} bitmap round-trip failures"))?;
    Ok(format!(
        "{} WBMP vectors exact, MBI 0..2^20 round-trips, {CODEC_SAMPLES} random bitmaps round-trip via WBMP and BMP",
        vectors.len()
    ))
}

fn overhead() -> Result<String, String> {
    let started = Instant::now();
    let report = bench::run(&BenchConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let (p, r) = (report.projection_ratio(), report.relay_ratio());
    for line in report.to_string().lines() {
        println!("    {line}");
    }
    ensure(elapsed < BENCH_TIME_LIMIT, || format!("benchmark took {elapsed:?}"))?;
    ensure(p.is_finite() && r.is_finite(), || "ratios not finite".into())?;
    let soft = |ok: bool| if ok { "met" } else { "MISSED (soft)" };
    Ok(format!(
        "ran in {:.1}s; parse+project/parse = {p:.2} (bound <= {PROJECTION_RATIO_BOUND}: {}), passthrough/legacy throughput = {r:.2} (bound >= {RELAY_RATIO_BOUND}: {})",
        elapsed.as_secs_f64(),
        soft(p <= PROJECTION_RATIO_BOUND),
        soft(r >= RELAY_RATIO_BOUND)
    ))
}

fn end_to_end() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    fs::write(dir.path().join("hello.whtml"), support::HELLO).map_err(|e| e.to_string())?;
    let root = dir.path().to_string_lossy().into_owned();
    let cache = dir.path().join("cache").to_string_lossy().into_owned();
    let origin = procs::server(&["origin", "--root", &root]);
    let gw = procs::server(&["serve", "--origin", &origin.addr, "--cache", &cache]);
    for (url, want) in [
        ("http://site/hello.whtml", support::HELLO_HTML),
        ("wap://site/hello.whtml", support::HELLO_WML),
    ] {
        let o = procs::run(&["fetch", url, "--gateway", &gw.addr]);
        ensure(o.status.success(), || format!("fetch {url} exited {:?}", o.status.code()))?;
        ensure(o.stdout == want.as_bytes(), || {
            format!("fetch {url} gave {:?}", String::from_utf8_lossy(&o.stdout))
        })?;
    }
    Ok("http and wap fetches return the projected Hello bodies byte-exact".into())
}

fn main() {
    let criteria: [(&str, Check); 7] = [
        ("well-formedness oracle equivalence", wellformedness_oracle),
        ("projection purity", projection_purity),
        ("security-gap reproduction", security_gap),
        ("bytecode reuse", bytecode_reuse),
        ("codec bit-exactness", codec_exactness),
        ("overhead benchmark", overhead),
        ("end-to-end fetch flow", end_to_end),
    ];
    // The reference interpreter recurses once per script call frame.
    let failed = std::thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(move || {
            let mut failed = 0;
            for (i, (name, check)) in criteria.iter().enumerate() {
                let result = panic::catch_unwind(AssertUnwindSafe(check))
                    .unwrap_or_else(|p| Err(format!("panicked: {p:?}")));
                match result {
                    Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
                    Err(why) => {
                        failed += 1;
                        println!("FAIL {}. {name}: {why}", i + 1);
                    }
                }
            }
            failed
        })
        .expect("spawn")
        .join()
        .expect("criteria thread");
    if failed > 0 {
        std::process::exit(1);
    }
}
