//! XCSP ingestion restricted to binary extensional constraints.
//!
//! Two layouts are recognised. The 2.x layout declares `<domains>`,
//! `<variables>`, `<relations>` and `<constraints>` whose `reference`
//! points at a relation. The 3 layout declares `<var>` elements and
//! `<extension>` constraints with `<list>` plus `<supports>` or `<conflicts>`.
//! Supports are converted to conflicts over the full Cartesian product.

use std::collections::{HashMap, HashSet};

use roxmltree::{Document, Node};

use super::{ConflictSpec, CspInstance, Variable};
use crate::error::{Error, Result};

pub fn parse_xcsp(text: &str) -> Result<CspInstance> {
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        Error::parse(format!("line {}, column {}", pos.row, pos.col), e.to_string())
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "instance" {
        return Err(err(root, "expected an <instance> root element"));
    }
    let modern = root.attribute("format").is_some_and(|f| f.starts_with("XCSP3"))
        || child(root, "variables")
            .is_some_and(|vars| vars.children().any(|c| c.has_tag_name("var")));
    if modern {
        parse_v3(root)
    } else {
        parse_v2(root)
    }
}

fn err(node: Node, message: impl Into<String>) -> Error {
    let pos = node.document().text_pos_at(node.range().start);
    Error::parse(
        format!("line {}, <{}>", pos.row, node.tag_name().name()),
        message,
    )
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn elements<'a, 'i>(node: Node<'a, 'i>, name: &'static str) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(move |c| c.has_tag_name(name))
}

fn required<'a>(node: Node<'a, '_>, attr: &str) -> Result<&'a str> {
    node.attribute(attr)
        .ok_or_else(|| err(node, format!("missing attribute `{attr}`")))
}

fn int(node: Node, token: &str) -> Result<i64> {
    token
        .parse()
        .map_err(|_| err(node, format!("`{token}` is not an integer")))
}

/// Whitespace-separated integers and `lo..hi` ranges.
fn parse_values(node: Node, text: &str) -> Result<Vec<i64>> {
    let mut values = Vec::new();
    for token in text.split_whitespace() {
        match token.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi) = (int(node, lo)?, int(node, hi)?);
                if hi < lo {
                    return Err(err(node, format!("empty range `{token}`")));
                }
                values.extend(lo..=hi);
            }
            None => values.push(int(node, token)?),
        }
    }
    Ok(values)
}

fn text_of<'a>(node: Node<'a, '_>) -> &'a str {
    node.text().unwrap_or("")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Semantics {
    Supports,
    Conflicts,
}

fn to_conflicts(
    tuples: Vec<[i64; 2]>,
    semantics: Semantics,
    da: &[i64],
    db: &[i64],
) -> Vec<[i64; 2]> {
    match semantics {
        Semantics::Conflicts => tuples,
        Semantics::Supports => {
            let allowed: HashSet<[i64; 2]> = tuples.into_iter().collect();
            da.iter()
                .flat_map(|&x| db.iter().map(move |&y| [x, y]))
                .filter(|t| !allowed.contains(t))
                .collect()
        }
    }
}

fn parse_v2(root: Node) -> Result<CspInstance> {
    let mut domains: HashMap<&str, Vec<i64>> = HashMap::new();
    if let Some(block) = child(root, "domains") {
        for d in elements(block, "domain") {
            domains.insert(required(d, "name")?, parse_values(d, text_of(d))?);
        }
    }

    let block = child(root, "variables").ok_or_else(|| err(root, "missing <variables>"))?;
    let mut variables = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for v in elements(block, "variable") {
        let name = required(v, "name")?;
        let dname = required(v, "domain")?;
        let domain = domains
            .get(dname)
            .ok_or_else(|| err(v, format!("unknown domain `{dname}`")))?
            .clone();
        if index.insert(name, variables.len()).is_some() {
            return Err(err(v, format!("duplicate variable `{name}`")));
        }
        variables.push(Variable {
            name: name.to_string(),
            domain,
        });
    }

    let mut relations: HashMap<&str, (Semantics, Vec<[i64; 2]>)> = HashMap::new();
    if let Some(block) = child(root, "relations") {
        for r in elements(block, "relation") {
            let name = required(r, "name")?;
            if r.attribute("arity").is_some_and(|a| a != "2") {
                return Err(err(r, format!("relation `{name}` is not binary")));
            }
            let semantics = match required(r, "semantics")? {
                "conflicts" => Semantics::Conflicts,
                "supports" => Semantics::Supports,
                other => return Err(err(r, format!("unsupported semantics `{other}`"))),
            };
            let mut tuples = Vec::new();
            for tuple in text_of(r).split('|').filter(|t| !t.trim().is_empty()) {
                let vals = parse_values(r, tuple)?;
                let [a, b] = vals[..] else {
                    return Err(err(r, format!("tuple `{}` is not a pair", tuple.trim())));
                };
                tuples.push([a, b]);
            }
            relations.insert(name, (semantics, tuples));
        }
    }
    if let Some(p) = child(root, "predicates") {
        if elements(p, "predicate").next().is_some() {
            return Err(err(p, "intensional predicates are not supported"));
        }
    }

    let mut specs = Vec::new();
    if let Some(block) = child(root, "constraints") {
        for c in elements(block, "constraint") {
            let scope: Vec<&str> = required(c, "scope")?.split_whitespace().collect();
            let [a, b] = scope[..] else {
                return Err(err(c, "only binary constraints are supported"));
            };
            let lookup = |n: &str| {
                index
                    .get(n)
                    .copied()
                    .ok_or_else(|| err(c, format!("unknown variable `{n}`")))
            };
            let (a, b) = (lookup(a)?, lookup(b)?);
            let reference = required(c, "reference")?;
            let (semantics, tuples) = relations
                .get(reference)
                .ok_or_else(|| err(c, format!("unknown relation `{reference}`")))?;
            specs.push(ConflictSpec {
                scope: [a, b],
                conflicts: to_conflicts(
                    tuples.clone(),
                    *semantics,
                    &variables[a].domain,
                    &variables[b].domain,
                ),
            });
        }
    }
    CspInstance::new(variables, specs)
}

/// `(0,1)(1,0)` style tuples.
fn parse_tuples(node: Node) -> Result<Vec<[i64; 2]>> {
    let text = text_of(node);
    let mut out = Vec::new();
    for chunk in text.split(')') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let Some(body) = chunk.strip_prefix('(') else {
            return Err(err(node, format!("malformed tuple near `{chunk}`")));
        };
        let vals: Vec<&str> = body.split(',').map(str::trim).collect();
        let [a, b] = vals[..] else {
            return Err(err(node, format!("tuple `({body})` is not a pair")));
        };
        out.push([int(node, a)?, int(node, b)?]);
    }
    Ok(out)
}

fn parse_v3(root: Node) -> Result<CspInstance> {
    let block = child(root, "variables").ok_or_else(|| err(root, "missing <variables>"))?;
    let mut variables = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for v in block.children().filter(Node::is_element) {
        if !v.has_tag_name("var") {
            return Err(err(v, "only <var> declarations are supported"));
        }
        let id = required(v, "id")?;
        if index.insert(id, variables.len()).is_some() {
            return Err(err(v, format!("duplicate variable `{id}`")));
        }
        variables.push(Variable {
            name: id.to_string(),
            domain: parse_values(v, text_of(v))?,
        });
    }

    let mut specs = Vec::new();
    if let Some(block) = child(root, "constraints") {
        collect_v3(block, &index, &variables, &mut specs)?;
    }
    CspInstance::new(variables, specs)
}

fn collect_v3(
    block: Node,
    index: &HashMap<&str, usize>,
    variables: &[Variable],
    specs: &mut Vec<ConflictSpec>,
) -> Result<()> {
    for c in block.children().filter(Node::is_element) {
        match c.tag_name().name() {
            "block" => collect_v3(c, index, variables, specs)?,
            "extension" => {
                let list = child(c, "list").ok_or_else(|| err(c, "missing <list>"))?;
                let names: Vec<&str> = text_of(list).split_whitespace().collect();
                let [a, b] = names[..] else {
                    return Err(err(c, "only binary constraints are supported"));
                };
                let lookup = |n: &str| {
                    index
                        .get(n)
                        .copied()
                        .ok_or_else(|| err(c, format!("unknown variable `{n}`")))
                };
                let (a, b) = (lookup(a)?, lookup(b)?);
                let (semantics, node) = match (child(c, "supports"), child(c, "conflicts")) {
                    (Some(s), None) => (Semantics::Supports, s),
                    (None, Some(f)) => (Semantics::Conflicts, f),
                    _ => return Err(err(c, "expected exactly one of <supports> or <conflicts>")),
                };
                specs.push(ConflictSpec {
                    scope: [a, b],
                    conflicts: to_conflicts(
                        parse_tuples(node)?,
                        semantics,
                        &variables[a].domain,
                        &variables[b].domain,
                    ),
                });
            }
            other => return Err(err(c, format!("unsupported constraint `<{other}>`"))),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const V2: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<instance>
  <presentation name="toy" format="XCSP 2.1"/>
  <domains nbDomains="1"><domain name="D0" nbValues="3">0..2</domain></domains>
  <variables nbVariables="3">
    <variable name="V0" domain="D0"/>
    <variable name="V1" domain="D0"/>
    <variable name="V2" domain="D0"/>
  </variables>
  <relations nbRelations="2">
    <relation name="R0" arity="2" nbTuples="2" semantics="conflicts">0 0|1 1</relation>
    <relation name="R1" arity="2" nbTuples="3" semantics="supports">0 1|1 2|2 0</relation>
  </relations>
  <constraints nbConstraints="2">
    <constraint name="C0" arity="2" scope="V0 V1" reference="R0"/>
    <constraint name="C1" arity="2" scope="V2 V1" reference="R1"/>
  </constraints>
</instance>"#;

    #[test]
    fn version_two_layout() {
        let inst = parse_xcsp(V2).unwrap();
        assert_eq!(inst.variable_count(), 3);
        assert_eq!(inst.domain_size(0), 3);
        let c = &inst.constraints()[0];
        assert_eq!(c.conflict_count(), 2);
        assert!(c.conflicts(0, 0) && c.conflicts(1, 1) && !c.conflicts(2, 2));
        // supports on (V2, V1) become 6 conflicts, stored with scope (1, 2)
        let c = &inst.constraints()[1];
        assert_eq!(c.scope, (1, 2));
        assert_eq!(c.conflict_count(), 6);
        assert!(!c.conflicts(1, 0)); // V1=1, V2=0 is supported
        assert!(c.conflicts(0, 0));
    }

    #[test]
    fn version_three_layout() {
        let text = r#"<instance format="XCSP3" type="CSP">
  <variables>
    <var id="x"> 0 1 </var>
    <var id="y"> 0..1 </var>
  </variables>
  <constraints>
    <extension><list> x y </list><supports> (0,1)(1,0) </supports></extension>
  </constraints>
</instance>"#;
        let inst = parse_xcsp(text).unwrap();
        let c = &inst.constraints()[0];
        assert_eq!(c.conflict_count(), 2);
        assert!(c.conflicts(0, 0) && c.conflicts(1, 1));
    }

    #[test]
    fn rejects_non_binary_and_intensional() {
        let ternary = V2.replace(r#"scope="V0 V1""#, r#"scope="V0 V1 V2""#);
        assert!(parse_xcsp(&ternary).is_err());
        let text = r#"<instance format="XCSP3"><variables><var id="x">0 1</var></variables>
<constraints><intension> eq(x,1) </intension></constraints></instance>"#;
        let e = parse_xcsp(text).unwrap_err().to_string();
        assert!(e.contains("intension"), "{e}");
    }

    #[test]
    fn reports_location_of_bad_xml() {
        let e = parse_xcsp("<instance><variables></instance>").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }
}
