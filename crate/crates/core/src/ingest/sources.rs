//! Fixture schemas for each registry. Field names follow the registries'
//! own export formats where one exists.

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{parse_timestamp, DocLink, PubKind, PublicationId, RawRecord, SourceKind};
use crate::Timestamp;

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl Default for OneOrMany {
    fn default() -> Self {
        OneOrMany::Many(Vec::new())
    }
}

impl OneOrMany {
    fn into_vec(self) -> Vec<String> {
        match self {
            OneOrMany::One(s) => vec![s],
            OneOrMany::Many(v) => v,
        }
    }
}

fn decode<T: DeserializeOwned>(v: serde_json::Value) -> Result<T, String> {
    serde_json::from_value(v).map_err(|e| format!("malformed entry: {e}"))
}

fn stamp(own: Option<String>, default: Timestamp) -> Result<Timestamp, String> {
    own.map(|s| parse_timestamp(&s)).unwrap_or(Ok(default))
}

fn base(source: SourceKind, id: Option<String>, name: Option<String>, type_raw: String) -> Result<RawRecord, String> {
    let name = name.filter(|n| !n.trim().is_empty()).ok_or("missing name")?;
    let id = id.filter(|i| !i.trim().is_empty()).unwrap_or_else(|| name.clone());
    Ok(RawRecord::minimal(source, id.trim(), &name, &type_raw))
}

pub(super) fn parse_entry(
    source: SourceKind,
    entry: serde_json::Value,
    default_ts: Timestamp,
) -> Result<RawRecord, String> {
    match source {
        SourceKind::Biotools => biotools(decode(entry)?, default_ts),
        SourceKind::Bioconda => bioconda(decode(entry)?, default_ts),
        SourceKind::Bioconductor => bioconductor(decode(entry)?, default_ts),
        SourceKind::Toolshed => toolshed(decode(entry)?, default_ts),
        SourceKind::GalaxyEu => galaxy(decode(entry)?, default_ts),
        SourceKind::Sourceforge => sourceforge(decode(entry)?, default_ts),
        SourceKind::Github => github(decode(entry)?, default_ts),
    }
}

// bio.tools

#[derive(Deserialize)]
struct BtLink {
    url: String,
    #[serde(rename = "type", default)]
    kind: OneOrMany,
}

#[derive(Deserialize)]
struct BtCredit {
    name: Option<String>,
    email: Option<String>,
}

#[derive(Deserialize)]
struct BtPublication {
    doi: Option<String>,
    pmid: Option<String>,
    pmcid: Option<String>,
}

#[derive(Deserialize)]
struct BtFormat {
    term: String,
}

#[derive(Deserialize)]
struct BtData {
    #[serde(default)]
    format: Vec<BtFormat>,
}

#[derive(Deserialize)]
struct BtFunction {
    #[serde(default)]
    input: Vec<BtData>,
    #[serde(default)]
    output: Vec<BtData>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Biotools {
    #[serde(rename = "biotoolsID")]
    biotools_id: Option<String>,
    name: Option<String>,
    #[serde(default)]
    tool_type: Vec<String>,
    homepage: Option<String>,
    description: Option<String>,
    #[serde(default)]
    link: Vec<BtLink>,
    #[serde(default)]
    download: Vec<BtLink>,
    #[serde(default)]
    documentation: Vec<BtLink>,
    license: Option<String>,
    #[serde(default)]
    credit: Vec<BtCredit>,
    #[serde(default)]
    publication: Vec<BtPublication>,
    #[serde(default)]
    version: Vec<String>,
    #[serde(default)]
    function: Vec<BtFunction>,
    #[serde(rename = "collectionID", default)]
    collection_id: Vec<String>,
    #[serde(default)]
    dependencies: Vec<String>,
    tests: Option<bool>,
    #[serde(rename = "retrieved_at")]
    retrieved_at: Option<String>,
}

fn biotools(e: Biotools, ts: Timestamp) -> Result<RawRecord, String> {
    let ty = e.tool_type.first().cloned().unwrap_or_default();
    let mut r = base(SourceKind::Biotools, e.biotools_id, e.name, ty)?;
    r.retrieved_at = stamp(e.retrieved_at, ts)?;
    r.description = e.description;
    r.webpages.extend(e.homepage);
    for l in e.link {
        let kinds = l.kind.into_vec();
        if kinds.iter().any(|k| k.to_lowercase().contains("repository")) {
            r.repositories.push(l.url);
        } else {
            r.webpages.push(l.url);
        }
    }
    r.download_links = e.download.into_iter().map(|d| d.url).collect();
    r.documentation = e
        .documentation
        .into_iter()
        .map(|d| DocLink {
            label: d.kind.into_vec().join(", "),
            url: d.url,
        })
        .collect();
    r.licenses_raw.extend(e.license);
    r.authors_raw = e
        .credit
        .into_iter()
        .filter_map(|c| match (c.name, c.email) {
            (Some(n), Some(m)) => Some(format!("{n} <{m}>")),
            (Some(n), None) => Some(n),
            (None, Some(m)) => Some(m),
            (None, None) => None,
        })
        .collect();
    for p in e.publication {
        let ids = [(PubKind::Doi, p.doi), (PubKind::Pmid, p.pmid), (PubKind::Pmcid, p.pmcid)];
        r.publication_ids
            .extend(ids.into_iter().filter_map(|(kind, v)| v.map(|value| PublicationId { kind, value })));
    }
    r.version_strings = e.version;
    for f in e.function {
        r.input_formats_raw.extend(f.input.into_iter().flat_map(|d| d.format).map(|f| f.term));
        r.output_formats_raw.extend(f.output.into_iter().flat_map(|d| d.format).map(|f| f.term));
    }
    r.collections = e.collection_id;
    r.dependencies = e.dependencies;
    r.tests_declared = e.tests;
    Ok(r)
}

// Bioconda recipes (meta.yaml rendered to JSON)

#[derive(Deserialize, Default)]
struct CondaAbout {
    home: Option<String>,
    license: Option<String>,
    summary: Option<String>,
    description: Option<String>,
    dev_url: Option<String>,
    doc_url: Option<String>,
}

#[derive(Deserialize, Default)]
struct CondaRequirements {
    #[serde(default)]
    run: Vec<String>,
}

#[derive(Deserialize, Default)]
struct CondaTest {
    #[serde(default)]
    commands: Vec<String>,
    #[serde(default)]
    imports: Vec<String>,
}

#[derive(Deserialize, Default)]
struct CondaExtra {
    #[serde(default)]
    identifiers: Vec<String>,
    #[serde(rename = "recipe-maintainers", default)]
    recipe_maintainers: Vec<String>,
}

#[derive(Deserialize)]
struct Bioconda {
    name: Option<String>,
    version: Option<String>,
    #[serde(rename = "type")]
    kind: Option<String>,
    #[serde(default)]
    about: CondaAbout,
    #[serde(default)]
    requirements: CondaRequirements,
    test: Option<CondaTest>,
    #[serde(default)]
    extra: CondaExtra,
    #[serde(default)]
    collections: Vec<String>,
    retrieved_at: Option<String>,
}

/// `python >=3.8` → `python`
fn package_name(spec: &str) -> String {
    spec.trim()
        .split(|c: char| c.is_whitespace() || "<>=!~(".contains(c))
        .next()
        .unwrap_or("")
        .to_owned()
}

fn bioconda(e: Bioconda, ts: Timestamp) -> Result<RawRecord, String> {
    let name = e.name.clone();
    let mut r = base(SourceKind::Bioconda, None, e.name, e.kind.unwrap_or_else(|| "cmd".into()))?;
    r.retrieved_at = stamp(e.retrieved_at, ts)?;
    r.description = e.about.summary.or(e.about.description);
    r.webpages.extend(e.about.home);
    r.repositories.extend(e.about.dev_url);
    if let Some(doc) = e.about.doc_url {
        r.documentation.push(DocLink { label: "documentation".into(), url: doc });
    }
    r.licenses_raw.extend(e.about.license);
    r.version_strings.extend(e.version);
    r.dependencies = e.requirements.run.iter().map(|s| package_name(s)).filter(|s| !s.is_empty()).collect();
    r.tests_declared = e.test.map(|t| !(t.commands.is_empty() && t.imports.is_empty()));
    for id in e.extra.identifiers {
        if let Some((kind, value)) = id.split_once(':') {
            let kind = match kind.trim().to_lowercase().as_str() {
                "doi" => PubKind::Doi,
                "pmid" => PubKind::Pmid,
                "pmcid" => PubKind::Pmcid,
                _ => continue,
            };
            r.publication_ids.push(PublicationId { kind, value: value.trim().to_owned() });
        }
    }
    let _ = e.extra.recipe_maintainers;
    if let Some(n) = name {
        r.download_links.push(format!("https://anaconda.org/bioconda/{}", n.trim()));
    }
    r.collections = e.collections;
    Ok(r)
}

// Bioconductor DESCRIPTION metadata

#[derive(Deserialize)]
struct Vignette {
    title: String,
    url: String,
}

#[derive(Deserialize)]
struct Bioconductor {
    #[serde(rename = "Package")]
    package: Option<String>,
    #[serde(rename = "Version")]
    version: Option<String>,
    #[serde(rename = "Title")]
    title: Option<String>,
    #[serde(rename = "Description")]
    description: Option<String>,
    #[serde(rename = "License")]
    license: Option<String>,
    #[serde(rename = "URL")]
    url: Option<String>,
    #[serde(rename = "BugReports")]
    bug_reports: Option<String>,
    #[serde(rename = "Author")]
    author: Option<String>,
    #[serde(rename = "Depends", default)]
    depends: OneOrMany,
    #[serde(rename = "Imports", default)]
    imports: OneOrMany,
    #[serde(rename = "biocViews", default)]
    bioc_views: Vec<String>,
    #[serde(default)]
    vignettes: Vec<Vignette>,
    #[serde(rename = "type")]
    kind: Option<String>,
    #[serde(default)]
    tests: Option<bool>,
    retrieved_at: Option<String>,
}

/// Splits an R `Authors` string, dropping `[aut, cre]` role annotations.
fn split_r_authors(s: &str) -> Vec<String> {
    let mut cleaned = String::new();
    let mut depth = 0usize;
    for c in s.chars() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => cleaned.push(c),
            _ => {}
        }
    }
    cleaned
        .replace(" and ", ",")
        .split(',')
        .map(|a| a.trim().to_owned())
        .filter(|a| !a.is_empty())
        .collect()
}

fn r_packages(v: OneOrMany) -> Vec<String> {
    v.into_vec()
        .iter()
        .flat_map(|s| s.split(','))
        .map(package_name)
        .filter(|p| !p.is_empty() && p != "R")
        .collect()
}

fn bioconductor(e: Bioconductor, ts: Timestamp) -> Result<RawRecord, String> {
    let pkg = e.package.clone();
    let mut r = base(SourceKind::Bioconductor, None, e.package, e.kind.unwrap_or_else(|| "lib".into()))?;
    r.retrieved_at = stamp(e.retrieved_at, ts)?;
    r.description = match (e.title, e.description) {
        (_, Some(d)) => Some(d),
        (t, None) => t,
    };
    if let Some(u) = e.url {
        r.webpages.extend(u.split([',', ' ', '\n']).map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned));
    }
    if let Some(b) = e.bug_reports {
        r.webpages.push(b);
    }
    if let Some(p) = &pkg {
        r.repositories.push(format!("https://bioconductor.org/packages/{}", p.trim()));
        r.download_links.push(format!("https://bioconductor.org/packages/release/bioc/html/{}.html", p.trim()));
    }
    if let Some(l) = e.license {
        r.licenses_raw = l
            .split('|')
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .collect();
    }
    r.authors_raw = e.author.as_deref().map(split_r_authors).unwrap_or_default();
    r.dependencies = r_packages(e.depends);
    r.dependencies.extend(r_packages(e.imports));
    r.version_strings.extend(e.version);
    r.collections = e.bioc_views;
    r.documentation = e
        .vignettes
        .into_iter()
        .map(|v| DocLink { label: format!("vignette: {}", v.title), url: v.url })
        .collect();
    r.tests_declared = e.tests;
    Ok(r)
}

// Galaxy ToolShed repositories

#[derive(Deserialize)]
struct Toolshed {
    id: Option<String>,
    name: Option<String>,
    owner: Option<String>,
    #[serde(rename = "type")]
    kind: Option<String>,
    description: Option<String>,
    long_description: Option<String>,
    homepage_url: Option<String>,
    remote_repository_url: Option<String>,
    #[serde(default)]
    categories: Vec<String>,
    #[serde(default)]
    versions: Vec<String>,
    retrieved_at: Option<String>,
}

fn toolshed(e: Toolshed, ts: Timestamp) -> Result<RawRecord, String> {
    let id = e.id.or_else(|| match (&e.owner, &e.name) {
        (Some(o), Some(n)) => Some(format!("{o}/{n}")),
        _ => None,
    });
    let mut r = base(SourceKind::Toolshed, id, e.name, e.kind.unwrap_or_else(|| "cmd".into()))?;
    r.retrieved_at = stamp(e.retrieved_at, ts)?;
    r.description = e.description.or(e.long_description);
    r.webpages.extend(e.homepage_url);
    r.repositories.extend(e.remote_repository_url);
    r.collections = e.categories;
    r.version_strings = e.versions;
    Ok(r)
}

// Galaxy Europe tool panel

#[derive(Deserialize)]
struct GalaxyRequirement {
    name: String,
}

#[derive(Deserialize)]
struct Galaxy {
    id: Option<String>,
    name: Option<String>,
    version: Option<String>,
    description: Option<String>,
    #[serde(rename = "type")]
    kind: Option<String>,
    #[serde(default)]
    requirements: Vec<GalaxyRequirement>,
    #[serde(default)]
    inputs: Vec<String>,
    #[serde(default)]
    outputs: Vec<String>,
    help_url: Option<String>,
    panel_section: Option<String>,
    #[serde(default)]
    tests: Option<bool>,
    retrieved_at: Option<String>,
}

fn galaxy(e: Galaxy, ts: Timestamp) -> Result<RawRecord, String> {
    let mut r = base(SourceKind::GalaxyEu, e.id, e.name, e.kind.unwrap_or_else(|| "cmd".into()))?;
    r.retrieved_at = stamp(e.retrieved_at, ts)?;
    r.description = e.description;
    r.version_strings.extend(e.version);
    r.dependencies = e.requirements.into_iter().map(|q| q.name).collect();
    r.input_formats_raw = e.inputs;
    r.output_formats_raw = e.outputs;
    if let Some(h) = e.help_url {
        r.documentation.push(DocLink { label: "help".into(), url: h });
    }
    r.collections.extend(e.panel_section);
    r.tests_declared = e.tests;
    Ok(r)
}

// SourceForge projects

#[derive(Deserialize)]
struct SfDeveloper {
    name: String,
}

#[derive(Deserialize)]
struct Sourceforge {
    shortname: Option<String>,
    name: Option<String>,
    summary: Option<String>,
    external_homepage: Option<String>,
    url: Option<String>,
    #[serde(default)]
    license: Vec<String>,
    #[serde(default)]
    developers: Vec<SfDeveloper>,
    download_url: Option<String>,
    #[serde(rename = "type")]
    kind: Option<String>,
    retrieved_at: Option<String>,
}

fn sourceforge(e: Sourceforge, ts: Timestamp) -> Result<RawRecord, String> {
    let short = e.shortname.clone();
    let mut r = base(SourceKind::Sourceforge, e.shortname, e.name, e.kind.unwrap_or_default())?;
    r.retrieved_at = stamp(e.retrieved_at, ts)?;
    r.description = e.summary;
    r.webpages.extend(e.external_homepage);
    match (e.url, short) {
        (Some(u), _) => r.repositories.push(u),
        (None, Some(s)) => r.repositories.push(format!("https://sourceforge.net/projects/{}/", s.trim())),
        _ => {}
    }
    r.licenses_raw = e.license;
    r.authors_raw = e.developers.into_iter().map(|d| d.name).collect();
    r.download_links.extend(e.download_url);
    Ok(r)
}

// Mined GitHub repositories

#[derive(Deserialize)]
pub(super) struct GithubEntry {
    pub url: Option<String>,
    pub name: Option<String>,
    #[serde(rename = "type")]
    pub kind: Option<String>,
    #[serde(flatten)]
    pub doc: super::RepoDocument,
}

fn github(e: GithubEntry, ts: Timestamp) -> Result<RawRecord, String> {
    let url = e.url.filter(|u| !u.trim().is_empty()).ok_or("missing url")?;
    let mut doc = e.doc;
    if doc.name.is_none() {
        doc.name = e.name;
    }
    if doc.kind.is_none() {
        doc.kind = e.kind;
    }
    super::repo::record_from_repo(&url, doc, &crate::normalize::Tables::bundled().hosts, ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_dump;

    fn ts() -> Timestamp {
        "2025-01-01T00:00:00Z".parse().unwrap()
    }

    #[test]
    fn biotools_full_entry() {
        let doc = br#"[{
            "biotoolsID":"gromacs","name":"GROMACS","toolType":["Command-line tool","Library"],
            "homepage":"http://www.gromacs.org/","description":"Molecular dynamics.",
            "link":[{"url":"https://github.com/gromacs/gromacs","type":["Repository"]},{"url":"http://manual.gromacs.org","type":["Other"]}],
            "download":[{"url":"http://ftp.gromacs.org/gromacs.tar.gz","type":"Source code"}],
            "documentation":[{"url":"http://manual.gromacs.org/install","type":["Installation instructions"]}],
            "license":"LGPL-2.1","credit":[{"name":"GROMACS team","email":"info@gromacs.org"}],
            "publication":[{"doi":"10.1016/j.softx.2015.06.001","pmid":"123"}],
            "version":["2023.1"],
            "function":[{"input":[{"format":[{"term":"PDB"}]}],"output":[{"format":[{"term":"XTC"}]}]}],
            "collectionID":["BioExcel"]
        }]"#;
        let p = parse_dump(SourceKind::Biotools, doc, ts()).unwrap();
        assert!(p.rejects.is_empty(), "{:?}", p.rejects);
        let r = &p.records[0];
        assert_eq!(r.source_id, "gromacs");
        assert_eq!(r.type_raw, "Command-line tool");
        assert_eq!(r.repositories, vec!["https://github.com/gromacs/gromacs"]);
        assert_eq!(r.webpages.len(), 2);
        assert_eq!(r.documentation[0].label, "Installation instructions");
        assert_eq!(r.authors_raw, vec!["GROMACS team <info@gromacs.org>"]);
        assert_eq!(r.publication_ids.len(), 2);
        assert_eq!(r.input_formats_raw, vec!["PDB"]);
        assert_eq!(r.output_formats_raw, vec!["XTC"]);
        assert_eq!(r.collections, vec!["BioExcel"]);
    }

    #[test]
    fn bioconda_recipe() {
        let doc = br#"[{"name":"samtools","version":"1.17",
            "about":{"home":"http://www.htslib.org","license":"MIT","summary":"Tools for SAM/BAM","dev_url":"https://github.com/samtools/samtools"},
            "requirements":{"run":["htslib >=1.17","ncurses"]},
            "test":{"commands":["samtools --help"]},
            "extra":{"identifiers":["doi:10.1093/bioinformatics/btp352","biotools:samtools"]}}]"#;
        let r = &parse_dump(SourceKind::Bioconda, doc, ts()).unwrap().records[0];
        assert_eq!(r.type_raw, "cmd");
        assert_eq!(r.dependencies, vec!["htslib", "ncurses"]);
        assert_eq!(r.tests_declared, Some(true));
        assert_eq!(r.publication_ids.len(), 1);
        assert_eq!(r.download_links, vec!["https://anaconda.org/bioconda/samtools"]);
    }

    #[test]
    fn bioconductor_description() {
        let doc = br#"[{"Package":"limma","Version":"3.56.0","Title":"Linear Models","License":"GPL (>= 2)",
            "Author":"Gordon Smyth [cre, aut], Yifang Hu [ctb] and Matthew Ritchie [ctb]",
            "Depends":"R (>= 3.6.0)","Imports":["grDevices","graphics, stats"],"biocViews":["Proteomics"]}]"#;
        let r = &parse_dump(SourceKind::Bioconductor, doc, ts()).unwrap().records[0];
        assert_eq!(r.authors_raw, vec!["Gordon Smyth", "Yifang Hu", "Matthew Ritchie"]);
        assert_eq!(r.dependencies, vec!["grDevices", "graphics", "stats"]);
        assert_eq!(r.repositories, vec!["https://bioconductor.org/packages/limma"]);
        assert_eq!(r.licenses_raw, vec!["GPL (>= 2)"]);
        assert_eq!(r.type_raw, "lib");
    }

    #[test]
    fn toolshed_galaxy_sourceforge() {
        let ts_doc = br#"[{"name":"bwa","owner":"devteam","categories":["Mapping"],"remote_repository_url":"https://github.com/galaxyproject/tools-iuc"}]"#;
        let r = &parse_dump(SourceKind::Toolshed, ts_doc, ts()).unwrap().records[0];
        assert_eq!(r.source_id, "devteam/bwa");
        let g = br#"[{"id":"toolshed.g2.bx.psu.edu/repos/devteam/bwa/bwa/0.7","name":"BWA","inputs":["fastqsanger"],"requirements":[{"name":"bwa","version":"0.7"}],"help_url":"https://usegalaxy.eu/help/bwa"}]"#;
        let r = &parse_dump(SourceKind::GalaxyEu, g, ts()).unwrap().records[0];
        assert_eq!(r.dependencies, vec!["bwa"]);
        assert_eq!(r.documentation.len(), 1);
        let s = br#"[{"shortname":"mzmine","name":"MZmine","license":["GNU General Public License v2"],"developers":[{"name":"Tomas Pluskal"}]}]"#;
        let r = &parse_dump(SourceKind::Sourceforge, s, ts()).unwrap().records[0];
        assert_eq!(r.repositories, vec!["https://sourceforge.net/projects/mzmine/"]);
        assert_eq!(r.type_raw, "");
    }

    #[test]
    fn wrong_field_types_are_malformed() {
        let p = parse_dump(SourceKind::Toolshed, br#"[{"name":"x","categories":"Mapping"},{"name":"y","extra":1}]"#, ts()).unwrap();
        assert!(p.rejects[0].reason.starts_with("malformed entry"));
        // unknown fields are ignored
        assert_eq!(p.records.len(), 1);
    }

    #[test]
    fn github_dump_entry() {
        let doc = br#"[{"url":"https://github.com/J/ToolY","license":"MIT","readme":"ToolY aligns reads.","contributors":["Jane Doe"],"topics":["alignment"]},{"license":"MIT"}]"#;
        let p = parse_dump(SourceKind::Github, doc, ts()).unwrap();
        assert_eq!(p.records[0].source_id, "github.com/j/tooly");
        assert_eq!(p.records[0].name_raw, "ToolY");
        assert_eq!(p.rejects[0].reason, "missing url");
    }
}
