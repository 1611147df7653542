//! Acceptance criteria 1-12. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::error::Error;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use observatory::api::{router, AppState};
use observatory::disambiguate::{
    apply_decision, build_blocks, detect_conflicts, integrate, merge_all, render_issue, rescue, AgreementProxy,
    BlockStatus, Catalog, Decision, GroupView, IntegrateOptions, JaccardProxy, KnownApart, Method, Priority,
    ProxyFailure, SourceRef, Verdict, MERGED_SCHEMA,
};
use observatory::enrich::{
    unavailable_fraction, AvailabilityResult, EnrichSettings, Enricher, ProbeOutcome, SharedTransport, StubTransport,
};
use observatory::export::{export_document, to_cff, validate_cff, validate_masmp, ExportError, ExportFormat};
use observatory::ingest::{DocLink, PubKind, PublicationId};
use observatory::layer::read_lines;
use observatory::normalize::{cleanse, map_format, map_license, normalize_url, Agent, AgentKind, UrlKind};
use observatory::pipeline::{Layout, Pipeline, Stage};
use observatory::score::{
    fair_profile, principle_score, Assertions, IndicatorScore, Principle, ScoringConfig, ScoringInput,
    PROFILES_SCHEMA,
};
use observatory::stats::collection_stats;
use observatory::{BlockSet, FairProfile, MergedTool, RawRecord, SourceKind, Tables};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tower::ServiceExt;

use common::{fixture, t0, ts};

type Check = Result<String, Box<dyn Error>>;
type Criterion = (u32, &'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+).into());
        }
    };
}

fn refs_of(tool: &MergedTool) -> BTreeSet<String> {
    tool.members.iter().map(|k| k.member_ref()).collect()
}

fn set_of(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| (*s).to_owned()).collect()
}

fn run_rescue(instances: &[observatory::Instance]) -> Result<(BlockSet, Vec<MergedTool>), Box<dyn Error>> {
    let mut set = build_blocks(instances)?;
    detect_conflicts(&mut set);
    let catalog = Catalog::new(instances.iter().cloned());
    let priority = Priority::default();
    for block in set.blocks.values_mut() {
        if block.status == BlockStatus::Conflict {
            rescue(block, &catalog, &priority, &KnownApart::new(), t0())?;
        }
    }
    let tools = merge_all(&set, &catalog, &priority)?;
    Ok((set, tools))
}

fn c1_gromacs() -> Check {
    let start = Instant::now();
    let instances = common::instances(SourceKind::Biotools, "gromacs/biotools.json");
    let (set, tools) = run_rescue(&instances)?;
    let elapsed = start.elapsed();
    let gromacs = set_of(&["biotools:gromacs", "biotools:gromacs_lib", "biotools:gromacs_suite"]);
    ensure!(tools.iter().any(|t| refs_of(t) == gromacs), "no merged tool with exactly the three gromacs records");
    ensure!(
        tools.iter().any(|t| refs_of(t) == set_of(&["biotools:gromacs_mpi"])),
        "gromacs_mpi not kept separate"
    );
    ensure!(tools.len() == 2, "{} merged tools, expected 2", tools.len());
    let block = set
        .blocks
        .values()
        .find(|b| b.member_refs().contains(&"biotools:gromacs".to_string()))
        .ok_or("gromacs block missing")?;
    ensure!(block.status == BlockStatus::Rescued, "block status {:?}", block.status);
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("3 records merged, status rescued, {} ms", elapsed.as_millis()))
}

fn c2_anvio() -> Check {
    let mut instances = common::instances(SourceKind::Biotools, "anvio/biotools.json");
    instances.extend(common::instances(SourceKind::Bioconda, "anvio/bioconda.json"));
    let (_, tools) = run_rescue(&instances)?;
    ensure!(
        tools.iter().any(|t| refs_of(t) == set_of(&["biotools:anvio", "bioconda:anvio"])),
        "anvio workflow and cmd not merged"
    );
    ensure!(
        tools.iter().any(|t| refs_of(t) == set_of(&["bioconda:anvio-minimal"])),
        "anvio-minimal not separate"
    );
    ensure!(tools.len() == 2, "{} merged tools, expected 2", tools.len());
    Ok("anvio merged, anvio-minimal separate".into())
}

/// Labels connected components of `n` nodes under `edge` by flooding.
#[allow(clippy::needless_range_loop)]
fn closure(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut stack = vec![s];
        while let Some(a) = stack.pop() {
            for b in 0..n {
                if label[b] == usize::MAX && edge(a, b) {
                    label[b] = s;
                    stack.push(b);
                }
            }
        }
    }
    label
}

fn partition(refs: &[String], label: &[usize]) -> BTreeSet<BTreeSet<String>> {
    let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (r, l) in refs.iter().zip(label) {
        groups.entry(*l).or_default().insert(r.clone());
    }
    groups.into_values().collect()
}

fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<observatory::Instance> {
    const NAMES: [&str; 12] =
        ["alpha", "Alpha", " ALPHA ", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa"];
    const TYPES: [&str; 4] = ["cmd", "lib", "web", "workflow"];
    let n = rng.random_range(1..=200);
    (0..n)
        .map(|i| {
            let source = SourceKind::ALL[rng.random_range(0..SourceKind::ALL.len())];
            let name = NAMES[rng.random_range(0..NAMES.len())];
            let ty = TYPES[rng.random_range(0..TYPES.len())];
            let mut r = RawRecord::minimal(source, &format!("r{i}"), name, ty);
            for _ in 0..rng.random_range(0..3) {
                let k = rng.random_range(0..15);
                let url = match rng.random_range(0..5) {
                    0 => format!("https://github.com/o{k}/r{k}"),
                    1 => format!("git+https://github.com/O{k}/R{k}.git"),
                    2 => format!("https://sourceforge.net/projects/p{k}/files"),
                    3 => format!("https://bitbucket.org/o{k}/r{k}/src"),
                    _ => format!("https://site{k}.org/"),
                };
                if rng.random_bool(0.5) {
                    r.repositories.push(url);
                } else {
                    r.webpages.push(url);
                }
            }
            cleanse(&r, Tables::bundled()).unwrap().instance
        })
        .collect()
}

fn c3_blocking_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut records = 0;
    for corpus in 0..500 {
        let inst = random_corpus(&mut rng);
        records += inst.len();
        let refs: Vec<String> = inst.iter().map(|i| i.key.member_ref()).collect();
        let links: Vec<BTreeSet<&str>> = inst.iter().map(|i| i.link_evidence().collect()).collect();
        let linked = |a: usize, b: usize| !links[a].is_disjoint(&links[b]);
        let name = |a: usize, b: usize| inst[a].canonical_name() == inst[b].canonical_name();
        let ty = |a: usize, b: usize| inst[a].software_type() == inst[b].software_type();

        let want_blocks = partition(&refs, &closure(inst.len(), |a, b| name(a, b) || linked(a, b)));
        let want_subs = partition(&refs, &closure(inst.len(), |a, b| (name(a, b) && ty(a, b)) || linked(a, b)));

        let set = build_blocks(&inst)?;
        let got_blocks: BTreeSet<BTreeSet<String>> =
            set.blocks.values().map(|b| b.member_refs().into_iter().collect()).collect();
        let got_subs: BTreeSet<BTreeSet<String>> = set
            .blocks
            .values()
            .flat_map(|b| b.subclusters.iter().map(|s| s.iter().cloned().collect()))
            .collect();
        ensure!(got_blocks == want_blocks, "corpus {corpus}: blocks differ from brute-force closure");
        ensure!(got_subs == want_subs, "corpus {corpus}: subclusters differ from brute-force closure");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("500/500 corpora agree ({records} records), {} ms", elapsed.as_millis()))
}

fn described(source: SourceKind, id: &str, name: &str, ty: &str, desc: &str) -> observatory::Instance {
    let mut r = RawRecord::minimal(source, id, name, ty);
    r.description = Some(desc.to_owned());
    cleanse(&r, Tables::bundled()).unwrap().instance
}

fn c4_proxy_routing() -> Check {
    use SourceKind::*;
    let corpus = vec![
        described(Biotools, "kraken", "kraken", "cmd", "Taxonomic sequence classification using exact k-mer matches"),
        described(Bioconda, "kraken", "kraken", "lib", "Kraken: taxonomic sequence classification using exact k-mer matches"),
        described(Biotools, "mira", "mira", "cmd", "Whole genome shotgun and EST sequence assembler for Sanger, 454, Solexa and Ion Torrent data"),
        described(Bioconductor, "mira", "mira", "lib", "Methylation-based inference of regulatory activity from DNA methylation data"),
        described(Toolshed, "pipits", "pipits", "cmd", "Automated pipeline for analyses of fungal ITS sequences from the Illumina sequencing platform"),
        described(Sourceforge, "pipits", "pipits", "workflow", "Fungal ITS amplicon analysis pipeline with taxonomic classification of Illumina reads"),
        // similarity exactly tau_same = 2/4
        described(Biotools, "half", "half", "cmd", "x y"),
        described(Bioconda, "half", "half", "lib", "x y z w"),
        // similarity exactly tau_diff = 3/20
        described(Biotools, "edge", "edge", "cmd", "a1 a2 a3 b1 b2 b3 b4 b5 b6 b7 b8"),
        described(Bioconda, "edge", "edge", "lib", "a1 a2 a3 c1 c2 c3 c4 c5 c6 c7 c8 c9"),
    ];
    let proxy = JaccardProxy { tau_same: 0.5, tau_diff: 0.15 };
    let opts = IntegrateOptions { priority: Priority::default(), proxy_retries: 1, now: t0(), state_path: None };
    let out = integrate(&corpus, None, &proxy, &opts)?;
    let block_of = |set: &BlockSet, r: &str| {
        set.blocks.values().find(|b| b.member_refs().iter().any(|m| m == r)).cloned().unwrap()
    };
    let expect = [
        ("biotools:kraken", BlockStatus::ProxyResolved, 1),
        ("biotools:half", BlockStatus::ProxyResolved, 1),
        ("biotools:mira", BlockStatus::ProxyResolved, 2),
        ("biotools:edge", BlockStatus::ProxyResolved, 2),
        ("toolshed:pipits", BlockStatus::Escalated, 2),
    ];
    for (r, status, groups) in expect {
        let b = block_of(&out.blocks, r);
        ensure!(b.status == status, "{r}: status {:?}, expected {status:?}", b.status);
        ensure!(b.groups().len() == groups, "{r}: {} groups, expected {groups}", b.groups().len());
    }

    let catalog = Catalog::new(corpus.iter().cloned());
    let esc = block_of(&out.blocks, "toolshed:pipits");
    let doc = render_issue(&out.blocks, &esc.block_id, &catalog)?;
    let mut reversed = corpus.clone();
    reversed.reverse();
    let again = integrate(&reversed, None, &proxy, &opts)?;
    let doc2 = render_issue(&again.blocks, &esc.block_id, &Catalog::new(reversed.iter().cloned()))?;
    ensure!(doc == doc2, "issue document differs between runs");

    let mut set = out.blocks.clone();
    let before = esc.resolutions.len();
    let decision = Decision {
        block_id: esc.block_id.clone(),
        partition: vec![esc.member_refs()],
        decided_by: "curator".into(),
        rationale: "same fungal ITS pipeline".into(),
    };
    apply_decision(&mut set, &decision, ts("2026-02-01T00:00:00Z"))?;
    let after = &set.blocks[&esc.block_id];
    ensure!(after.status == BlockStatus::HumanResolved, "status {:?} after decision", after.status);
    ensure!(after.resolutions.len() == before + 1, "resolutions {} -> {}", before, after.resolutions.len());
    ensure!(after.resolutions.last().unwrap().method == Method::Human, "last resolution is not human");
    Ok("merge/split/escalate routed, issue deterministic, decision appends one resolution".into())
}

fn scores(values: &[(&str, f64)]) -> Vec<IndicatorScore> {
    values
        .iter()
        .map(|(id, v)| IndicatorScore { id: (*id).into(), value: *v, evidence: vec![], guidance: vec![] })
        .collect()
}

fn c5_interoperability_weights() -> Check {
    let c = ScoringConfig::bundled();
    let i = principle_score(&scores(&[("I1", 1.0), ("I2", 0.0), ("I3", 1.0)]), &c, Principle::I)?;
    ensure!((i - 0.9).abs() <= 1e-12, "I = {i}");
    let j = principle_score(&scores(&[("I1", 1.0), ("I2", 1.0), ("I3", 1.0)]), &c, Principle::I)?;
    ensure!(((j - i) - 0.1).abs() <= 1e-12, "flipping I2 changed I by {}", j - i);
    Ok(format!("I = {i}, delta = {}", j - i))
}

fn url(raw: &str) -> observatory::normalize::UrlRef {
    normalize_url(raw, &Tables::bundled().hosts).unwrap()
}

fn random_tool(rng: &mut ChaCha8Rng, i: usize) -> (MergedTool, Vec<AvailabilityResult>) {
    const TYPES: [&str; 8] = ["cmd", "lib", "web", "rest", "workflow", "suite", "db", "gizmo"];
    const LICENSES: [&str; 5] = ["MIT", "GPL-3.0", "custom", "Apache 2.0", "BSD-ish"];
    const FORMATS: [&str; 4] = ["FASTQ", "BAM", "weird", "SAM"];
    let mut r = RawRecord::minimal(
        SourceKind::ALL[rng.random_range(0..7)],
        &format!("t{i}"),
        &format!("tool{i}"),
        TYPES[rng.random_range(0..TYPES.len())],
    );
    let p = |rng: &mut ChaCha8Rng| rng.random_bool(0.4);
    if p(rng) {
        r.description = Some("does things".into());
    }
    if p(rng) {
        r.webpages.push(format!("https://tool{i}.org/"));
    }
    if p(rng) {
        r.repositories.push(format!("https://github.com/o/tool{i}"));
    }
    if p(rng) {
        r.licenses_raw.push(LICENSES[rng.random_range(0..LICENSES.len())].into());
    }
    if p(rng) {
        r.authors_raw.push("Ada Lovelace".into());
    }
    if p(rng) {
        r.publication_ids.push(PublicationId { kind: PubKind::Doi, value: format!("10.1/{i}") });
    }
    if p(rng) {
        r.documentation.push(DocLink { label: "manual".into(), url: "https://x.org/doc".into() });
    }
    if p(rng) {
        r.download_links.push("https://x.org/dl".into());
    }
    if p(rng) {
        r.version_strings.push("1.0".into());
    }
    if p(rng) {
        r.input_formats_raw.push(FORMATS[rng.random_range(0..4)].into());
    }
    if p(rng) {
        r.output_formats_raw.push(FORMATS[rng.random_range(0..4)].into());
    }
    if p(rng) {
        r.dependencies.push("zlib".into());
    }
    let inst = cleanse(&r, Tables::bundled()).unwrap().instance;
    let mut tool = observatory::disambiguate::merge_group(&[&inst], &Priority::default()).unwrap();
    if p(rng) {
        tool.sources.push(SourceRef { source: SourceKind::ALL[rng.random_range(0..7)], source_id: "x".into() });
    }
    let mut avail = Vec::new();
    if tool.software_type.is_deployable() {
        for k in 0..rng.random_range(0..3) {
            let code = if rng.random_bool(0.5) { 200 } else { 503 };
            avail.push(AvailabilityResult::from_probe(
                url(&format!("https://svc{k}.org/")),
                ProbeOutcome::Status { code, latency_ms: Some(5) },
                if rng.random_bool(0.5) { t0() } else { ts("2026-01-14T00:00:00Z") },
            ));
        }
    }
    (tool, avail)
}

type Addition = fn(&mut MergedTool, &mut Vec<AvailabilityResult>, &mut Assertions);

fn additions() -> Vec<(&'static str, Addition)> {
    vec![
        ("description", |m, _, _| m.description = Some("now described".into())),
        ("webpage", |m, _, _| m.urls.push(url("https://added.example.org/"))),
        ("repository", |m, _, _| m.urls.push(url("https://github.com/added/repo"))),
        ("spdx license", |m, _, _| m.licenses.push(map_license("MIT", &Tables::bundled().licenses))),
        ("free-text license", |m, _, _| m.licenses.push(map_license("my own terms", &Tables::bundled().licenses))),
        ("author", |m, _, _| m.agents.push(Agent { name: "Grace Hopper".into(), kind: AgentKind::Person, email: None })),
        ("publication", |m, _, _| m.publications.push(PublicationId { kind: PubKind::Pmid, value: "1".into() })),
        ("documentation", |m, _, _| m.documentation.push(DocLink { label: "usage".into(), url: "https://d.org".into() })),
        ("install docs", |m, _, _| {
            m.documentation.push(DocLink { label: "Installation instructions".into(), url: "https://d.org/i".into() })
        }),
        ("download", |m, _, _| m.downloads.push("https://dl.org/x".into())),
        ("version", |m, _, _| m.versions.push("9.9".into())),
        ("edam input", |m, _, _| m.input_formats.push(map_format("FASTA", &Tables::bundled().terms))),
        ("unmapped output", |m, _, _| m.output_formats.push(map_format("blob", &Tables::bundled().terms))),
        ("edam output", |m, _, _| m.output_formats.push(map_format("BAM", &Tables::bundled().terms))),
        ("dependency", |m, _, _| m.dependencies.push("libc".into())),
        ("tests", |m, _, _| m.tests_declared = Some(true)),
        ("registry", |m, _, _| m.sources.push(SourceRef { source: SourceKind::Biotools, source_id: "y".into() })),
        ("galaxy", |m, _, _| m.sources.push(SourceRef { source: SourceKind::GalaxyEu, source_id: "g".into() })),
        ("working service", |_, a, _| {
            let at = a.iter().map(|r| r.checked_at).max().unwrap_or(t0());
            a.push(AvailabilityResult::from_probe(
                url("https://alive.org/"),
                ProbeOutcome::Status { code: 200, latency_ms: Some(1) },
                at,
            ));
        }),
        ("asserted dependencies", |_, _, s| s.dependencies_declared = Some(true)),
        ("asserted tests", |_, _, s| s.tests_present = Some(true)),
    ]
}

fn profile_of(tool: &MergedTool, avail: &[AvailabilityResult], a: &Assertions, id: usize) -> FairProfile {
    let input = ScoringInput { tool, availability: avail, identity_count: 1 + id % 3, assertions: *a };
    fair_profile(&input, &ScoringConfig::bundled(), t0()).unwrap()
}

fn c6_scoring_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let adds = additions();
    let mut checks = 0usize;
    let mut license_cases = 0usize;
    for i in 0..10_000 {
        let (tool, avail) = random_tool(&mut rng, i);
        let base = profile_of(&tool, &avail, &Assertions::default(), i);
        let in_range = |v: f64| (0.0..=1.0).contains(&v);
        ensure!(base.indicators.iter().all(|s| in_range(s.value)), "tool {i}: indicator out of range");
        ensure!(base.principles.values().all(|v| in_range(*v)), "tool {i}: principle out of range");
        ensure!(in_range(base.overall), "tool {i}: overall out of range");
        for (what, add) in &adds {
            let (mut t2, mut a2, mut s2) = (tool.clone(), avail.clone(), Assertions::default());
            add(&mut t2, &mut a2, &mut s2);
            let after = profile_of(&t2, &a2, &s2, i);
            for (x, y) in base.indicators.iter().zip(&after.indicators) {
                ensure!(y.value >= x.value, "tool {i}: adding {what} lowered {} from {} to {}", x.id, x.value, y.value);
            }
            for p in Principle::ALL {
                ensure!(after.principle(p) >= base.principle(p), "tool {i}: adding {what} lowered {p:?}");
            }
            ensure!(after.overall >= base.overall, "tool {i}: adding {what} lowered overall");
            checks += 1;
        }
        if tool.licenses.iter().all(|l| l.spdx_id.is_none()) {
            let mut t2 = tool.clone();
            t2.licenses.push(map_license("MIT", &Tables::bundled().licenses));
            let after = profile_of(&t2, &avail, &Assertions::default(), i);
            ensure!(
                after.principle(Principle::R) > base.principle(Principle::R),
                "tool {i}: SPDX license did not raise R"
            );
            license_cases += 1;
        }
    }
    Ok(format!("10000 tools in range, {checks} monotonicity checks, {license_cases} SPDX-license increases"))
}

fn random_url(rng: &mut ChaCha8Rng) -> String {
    const SCHEMES: [&str; 5] = ["https://", "http://", "git+https://", "", "HTTPS://"];
    const HOSTS: [&str; 8] = [
        "github.com",
        "GitHub.com",
        "www.github.com",
        "gitlab.com",
        "bitbucket.org",
        "sourceforge.net",
        "www.example.org",
        "tools.Example.edu",
    ];
    let seg = |rng: &mut ChaCha8Rng| {
        let len = rng.random_range(1..8);
        (0..len)
            .map(|_| {
                let c = rng.random_range(0..38);
                match c {
                    0..=25 => (b'a' + c as u8) as char,
                    26..=35 => (b'0' + (c - 26) as u8) as char,
                    36 => '-',
                    _ => '_',
                }
            })
            .collect::<String>()
    };
    let mut u = format!("{}{}", SCHEMES[rng.random_range(0..5)], HOSTS[rng.random_range(0..8)]);
    let host = u.clone();
    if host.ends_with("sourceforge.net") && rng.random_bool(0.7) {
        u.push_str("/projects");
    }
    for _ in 0..rng.random_range(0..5) {
        let s = seg(rng);
        u.push('/');
        u.push_str(&if rng.random_bool(0.2) { s.to_uppercase() } else { s });
    }
    if rng.random_bool(0.2) {
        u.push_str(".git");
    }
    if rng.random_bool(0.3) {
        u.push('/');
    }
    if rng.random_bool(0.2) {
        u.push_str("?tab=readme");
    }
    if rng.random_bool(0.2) {
        u.push_str("#top");
    }
    u
}

fn fold(s: &str) -> String {
    s.trim_matches(|c: char| c.is_whitespace() || ".,;:\"'()[]{}".contains(c)).to_lowercase()
}

fn c7_normalization_properties() -> Check {
    let hosts = &Tables::bundled().hosts;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let raw = random_url(&mut rng);
        let once = normalize_url(&raw, hosts).map_err(|e| format!("{raw}: {e}"))?;
        let twice = normalize_url(&once.normalized, hosts).map_err(|e| format!("{}: {e}", once.normalized))?;
        ensure!(once.normalized == twice.normalized, "not idempotent: {raw} -> {} -> {}", once.normalized, twice.normalized);
        ensure!(once.kind == twice.kind, "kind changed for {raw}");
    }
    let example = normalize_url("git+https://github.com/Owner/Repo.git/tree/x", hosts)?;
    ensure!(example.normalized == "github.com/owner/repo", "example gave {}", example.normalized);
    ensure!(example.kind == UrlKind::Repository, "example kind {:?}", example.kind);

    let text = std::fs::read_to_string(fixture("../data/spdx_synonyms.tsv"))?;
    let table: Vec<(String, String)> = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (id, syn) = l.split_once('\t').unwrap();
            (id.trim().to_owned(), syn.trim().to_owned())
        })
        .collect();
    let folded: BTreeSet<String> = table.iter().map(|(_, s)| fold(s)).collect();
    let lic = &Tables::bundled().licenses;
    for (id, syn) in &table {
        let got = map_license(syn, lic);
        ensure!(got.spdx_id.as_deref() == Some(id.as_str()), "synonym `{syn}` mapped to {:?}", got.spdx_id);
    }
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz0123456789-+. ".chars().collect();
    let mut misses = 0;
    for _ in 0..20_000 {
        let (_, syn) = &table[rng.random_range(0..table.len())];
        let mut chars: Vec<char> = syn.chars().collect();
        let pos = rng.random_range(0..=chars.len());
        let c = alphabet[rng.random_range(0..alphabet.len())];
        match rng.random_range(0..3) {
            0 => chars.insert(pos, c),
            1 if pos < chars.len() => {
                chars.remove(pos);
            }
            _ if pos < chars.len() => chars[pos] = c,
            _ => chars.push(c),
        }
        let mutated: String = chars.into_iter().collect();
        if folded.contains(&fold(&mutated)) {
            continue;
        }
        let got = map_license(&mutated, lic);
        ensure!(got.spdx_id.is_none(), "mutated `{mutated}` (from `{syn}`) mapped to {:?}", got.spdx_id);
        misses += 1;
    }
    Ok(format!("10000 URLs idempotent, {} synonyms hit, {misses} mutations missed", table.len()))
}

fn c8_availability() -> Check {
    let stub = Arc::new(StubTransport::from_file(&fixture("availability/stub.json"))?);
    let expected: Value = serde_json::from_str(&std::fs::read_to_string(fixture("availability/expected.json"))?)?;
    let flags = expected["urls"].as_object().ok_or("expected.urls")?;
    let shared: SharedTransport = stub.clone();
    let enricher = Enricher::new(shared, EnrichSettings::default(), t0());

    let mut r = RawRecord::minimal(SourceKind::Biotools, "svc", "svc", "web");
    r.webpages = flags.keys().cloned().collect();
    let service = cleanse(&r, Tables::bundled())?.instance;
    let results = enricher.check_service(&service);
    ensure!(results.len() == 9, "{} results", results.len());
    for res in &results {
        let want = flags.get(&res.url.raw).and_then(Value::as_bool).ok_or(format!("unexpected {}", res.url.raw))?;
        ensure!(res.ok == want, "{}: ok = {}, expected {want}", res.url.raw, res.ok);
    }
    let frac = unavailable_fraction(&results).ok_or("no fraction")?;
    ensure!((frac - 4.0 / 9.0).abs() <= 1e-12, "unavailable fraction {frac}");

    let probes = stub.calls.probes.load(std::sync::atomic::Ordering::SeqCst);
    let mut r2 = r.clone();
    r2.type_raw = "cmd".into();
    let cmd = cleanse(&r2, Tables::bundled())?.instance;
    ensure!(enricher.check_service(&cmd).is_empty(), "non-deployable tool was checked");
    ensure!(
        stub.calls.probes.load(std::sync::atomic::Ordering::SeqCst) == probes,
        "non-deployable tool reached the transport"
    );
    Ok(format!("9 flags correct, unavailable fraction = {frac:.6}"))
}

type Judged = Arc<Mutex<Vec<(Vec<String>, Vec<String>)>>>;

struct CountingProxy {
    inner: JaccardProxy,
    judged: Judged,
}

impl AgreementProxy for CountingProxy {
    fn judge(&self, a: &GroupView<'_>, b: &GroupView<'_>) -> Result<Verdict, ProxyFailure> {
        self.judged.lock().unwrap().push((a.refs.to_vec(), b.refs.to_vec()));
        self.inner.judge(a, b)
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

fn c9_state_persistence() -> Check {
    // byte-identical round trip of a real state file
    let (dir, mut cfg) = common::mixed_config();
    cfg.data_dir = dir.path().join("full");
    Pipeline::new(cfg.clone())?.run(&Stage::ALL)?;
    let path = Layout::new(cfg.data_dir()).blocks();
    let text = std::fs::read_to_string(&path)?;
    let loaded = BlockSet::from_state_str(&text)?;
    ensure!(loaded.to_state_string() == text, "save -> load -> save is not byte-identical");
    let copy = dir.path().join("copy.json");
    observatory::disambiguate::persist_state(&loaded, &copy)?;
    ensure!(std::fs::read(&copy)? == std::fs::read(&path)?, "persisted copy differs");

    // incremental: add the github dump to a resolved state
    let mut partial = cfg.clone();
    partial.data_dir = dir.path().join("incremental");
    partial.sources.remove(&SourceKind::Github);
    partial.priority = None;
    Pipeline::new(partial.clone())?.run(&Stage::ALL)?;
    let first = observatory::disambiguate::load_state(&Layout::new(partial.data_dir()).blocks())?;
    let settled: Vec<_> = first.blocks.values().filter(|b| b.status.is_resolved()).cloned().collect();
    ensure!(!settled.is_empty(), "first run resolved nothing");

    let mut full = partial.clone();
    full.sources = cfg.sources.clone();
    let judged = Arc::new(Mutex::new(Vec::new()));
    let proxy = CountingProxy { inner: JaccardProxy { tau_same: 0.5, tau_diff: 0.15 }, judged: judged.clone() };
    let report = Pipeline::new(full.clone())?
        .with_proxy(Box::new(proxy))
        .run(&[Stage::Ingest, Stage::Normalize, Stage::Integrate])?;
    let second = observatory::disambiguate::load_state(&Layout::new(full.data_dir()).blocks())?;

    let mut reused = 0;
    for old in &settled {
        match second.blocks.get(&old.block_id) {
            Some(now) => {
                ensure!(now.resolutions == old.resolutions, "block {} resolutions changed", old.block_id);
                ensure!(now.status == old.status, "block {} status changed", old.block_id);
                reused += 1;
            }
            None => {
                let successor = second
                    .blocks
                    .values()
                    .find(|b| b.predecessors.contains(&old.block_id))
                    .ok_or(format!("resolved block {} vanished", old.block_id))?;
                ensure!(
                    successor.resolutions.iter().any(|r| r.rationale.starts_with("carried forward")),
                    "successor of {} lost its resolution",
                    old.block_id
                );
            }
        }
        let members: BTreeSet<String> = old.member_refs().into_iter().collect();
        for (a, b) in judged.lock().unwrap().iter() {
            let inside = |g: &Vec<String>| g.iter().all(|r| members.contains(r));
            ensure!(!(inside(a) && inside(b)), "resolved block {} was asked again", old.block_id);
        }
    }
    for (a, _) in judged.lock().unwrap().iter() {
        let block = second
            .blocks
            .values()
            .find(|b| b.member_refs().contains(&a[0]))
            .ok_or("judged refs not in any block")?;
        let names: BTreeSet<&str> = block.members.iter().map(|k| k.canonical_name.as_str()).collect();
        ensure!(names == BTreeSet::from(["deepbind"]), "proxy judged block {:?}", names);
    }
    let asked = judged.lock().unwrap().len();
    Ok(format!(
        "state round-trips byte-identically; {reused}/{} resolved blocks reused, {asked} new proxy call(s), merged {}",
        settled.len(),
        report.merged.unwrap_or(0)
    ))
}

fn merged_line(stdout: &str) -> Option<usize> {
    stdout
        .lines()
        .find_map(|l| l.trim().strip_prefix("merged:").map(|v| v.trim().parse().ok()))
        .flatten()
}

fn c10_end_to_end() -> Check {
    let mut outputs = Vec::new();
    let mut slowest = Duration::ZERO;
    for _ in 0..2 {
        let dir = common::copy_fixture("mixed");
        let start = Instant::now();
        let out = common::obs().arg("--config").arg(dir.path().join("obs.toml")).arg("run").output()?;
        slowest = slowest.max(start.elapsed());
        ensure!(out.status.success(), "obs run failed: {}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8(out.stdout)?;
        ensure!(merged_line(&stdout) == Some(41), "report says merged = {:?}", merged_line(&stdout));
        outputs.push(dir);
    }
    let files = ["state/merged.jsonl", "state/stats/all/20260115T000000Z.json", "state/profiles.jsonl"];
    for f in files {
        let a = std::fs::read(outputs[0].path().join(f))?;
        let b = std::fs::read(outputs[1].path().join(f))?;
        ensure!(a == b, "{f} differs between runs");
    }
    let rerun = common::obs().arg("--config").arg(outputs[0].path().join("obs.toml")).arg("run").output()?;
    ensure!(rerun.status.success(), "re-run failed");
    for f in files {
        let a = std::fs::read(outputs[0].path().join(f))?;
        let b = std::fs::read(outputs[1].path().join(f))?;
        ensure!(a == b, "{f} differs after re-running over existing state");
    }
    ensure!(slowest < Duration::from_secs(10), "slowest run took {slowest:?}");
    Ok(format!("merged = 41, byte-identical across runs, slowest {} ms", slowest.as_millis()))
}

fn c11_stats() -> Check {
    let tools: Vec<MergedTool> = read_lines(&fixture("stats10/tools.jsonl"), MERGED_SCHEMA)?;
    let profiles: Vec<FairProfile> = read_lines(&fixture("stats10/profiles.jsonl"), PROFILES_SCHEMA)?;
    let expected: Value = serde_json::from_str(&std::fs::read_to_string(fixture("stats10/expected.json"))?)?;
    let refs: Vec<&FairProfile> = profiles.iter().collect();
    let s = collection_stats("all", &tools, &refs, &HashMap::new(), t0())?;
    let got = serde_json::to_value(&s)?;
    ensure!(s.n_tools == 10, "n_tools {}", s.n_tools);
    for key in ["field_completeness", "source_breakdown", "license_distribution", "scoreboard"] {
        ensure!(got[key] == expected[key], "{key}: got {}, expected {}", got[key], expected[key]);
    }
    let buckets: usize = s.source_breakdown.by_combination.values().sum();
    ensure!(buckets == s.n_tools, "source buckets sum to {buckets}");
    Ok("completeness, sources, licenses and scoreboard match exactly; buckets sum to 10".into())
}

async fn api_export(state: Arc<AppState>, format: &str, tool_id: &str) -> Result<(u16, Vec<u8>), Box<dyn Error>> {
    let req = Request::post(format!("/v1/export/{format}"))
        .header("content-type", "application/json")
        .body(Body::from(serde_json::json!({ "tool_id": tool_id }).to_string()))?;
    let resp = router(state).oneshot(req).await?;
    let status = resp.status().as_u16();
    let body = resp.into_body().collect().await?.to_bytes().to_vec();
    Ok((status, body))
}

fn c12_exports() -> Check {
    let dir = common::copy_fixture("mixed");
    let config = dir.path().join("obs.toml");
    let out = common::obs().arg("--config").arg(&config).arg("run").output()?;
    ensure!(out.status.success(), "obs run failed");
    let cfg = observatory::RunConfig::load(&config)?;
    let state = Arc::new(AppState::from_config(&cfg).map_err(|e| e.to_string())?);
    let rt = tokio::runtime::Runtime::new()?;

    let tool_id = "samtools.cmd";
    let mut docs = BTreeMap::new();
    for format in ["cff", "masmp"] {
        let cli = common::obs()
            .arg("--config")
            .arg(&config)
            .args(["export", "--tool", tool_id, "--format", format])
            .output()?;
        ensure!(cli.status.success(), "obs export {format} failed");
        let (status, api) = rt.block_on(api_export(state.clone(), format, tool_id))?;
        ensure!(status == 200, "API export {format} returned {status}");
        ensure!(cli.stdout == api, "{format}: CLI and API bytes differ");
        docs.insert(format, String::from_utf8(api)?);
    }

    let cff = &docs["cff"];
    validate_cff(cff).map_err(|e| e.join("; "))?;
    let y: serde_yaml::Value = serde_yaml::from_str(cff)?;
    ensure!(y["cff-version"].as_str() == Some("1.2.0"), "cff-version");
    for key in ["message", "title"] {
        ensure!(y[key].as_str().is_some_and(|s| !s.is_empty()), "missing {key}");
    }
    let authors = y["authors"].as_sequence().ok_or("authors not a list")?;
    ensure!(!authors.is_empty(), "no authors");
    ensure!(
        authors.iter().all(|a| a.get("family-names").is_some() || a.get("name").is_some()),
        "author without family-names or name"
    );

    let masmp = &docs["masmp"];
    validate_masmp(masmp).map_err(|e| e.join("; "))?;
    let j: Value = serde_json::from_str(masmp)?;
    ensure!(j["@context"] == "https://schema.org", "context {}", j["@context"]);
    ensure!(j["@type"].is_string(), "no @type");
    ensure!(j["license"] == "https://spdx.org/licenses/MIT", "license {}", j["license"]);

    let tools = Pipeline::new(cfg)?.load_merged()?;
    let anonymous = tools.iter().find(|t| t.agents.is_empty()).ok_or("no author-less tool in corpus")?;
    ensure!(matches!(to_cff(anonymous), Err(ExportError::MissingAuthors)), "to_cff did not raise MissingAuthors");
    ensure!(
        matches!(export_document(anonymous, ExportFormat::Cff), Err(ExportError::MissingAuthors)),
        "export_document did not raise MissingAuthors"
    );
    let (status, body) = rt.block_on(api_export(state, "cff", &anonymous.tool_id))?;
    let err: Value = serde_json::from_slice(&body)?;
    ensure!(status == 400 && err["code"] == "missing_authors", "API gave {status} {err}");
    Ok("CFF valid, maSMP valid JSON-LD with SPDX URL, CLI == API bytes, MissingAuthors raised".into())
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| (*s).to_owned()))
        .unwrap_or_else(|| "panic".into())
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "gromacs rescue", c1_gromacs),
        (2, "anvio rescue", c2_anvio),
        (3, "blocking oracle", c3_blocking_oracle),
        (4, "proxy routing", c4_proxy_routing),
        (5, "interoperability weights", c5_interoperability_weights),
        (6, "scoring properties", c6_scoring_properties),
        (7, "normalization properties", c7_normalization_properties),
        (8, "availability fixture", c8_availability),
        (9, "state persistence", c9_state_persistence),
        (10, "end-to-end run", c10_end_to_end),
        (11, "collection statistics", c11_stats),
        (12, "exports", c12_exports),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (n, title, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| title.contains(f.as_str()) || f == &n.to_string()) {
            continue;
        }
        ran += 1;
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| Err(panic_message(p).into()));
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS  {title}: {detail}"),
            Err(e) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {title}: {e}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
