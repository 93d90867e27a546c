//! Mapping file: one `#`-prefixed JSON header line, then `old new` per rank.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evalcost::instance_fingerprint;
use crate::grid::Grid;
use crate::mappers::{Aggregate, Algorithm, NodeConfig, RankMapping};
use crate::stencil::{Stencil, StencilFile};

pub const FORMAT: &str = "cartreorder-mapping/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub dims: Vec<usize>,
    pub periods: Vec<bool>,
    pub stencil: StencilFile,
    pub stencil_hash: String,
    pub sizes: Vec<usize>,
    pub aggregate: Aggregate,
    pub algorithm: Algorithm,
    pub seed: Option<u64>,
    pub flags: Vec<String>,
    /// Fingerprint of (dims, periods, stencil, sizes).
    pub instance: String,
    /// Edge counting convention used by `eval`.
    pub edges: String,
}

pub fn stencil_hash(stencil: &Stencil) -> String {
    let json = serde_json::to_string(&StencilFile::from(stencil)).expect("stencil serialises");
    Sha256::digest(json.as_bytes())[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Header {
    pub fn new(
        grid: &Grid,
        stencil: &Stencil,
        nodes: &NodeConfig,
        mapping: &RankMapping,
        flags: Vec<String>,
    ) -> Self {
        Header {
            format: FORMAT.to_string(),
            dims: grid.dims().to_vec(),
            periods: grid.periods().to_vec(),
            stencil: StencilFile::from(stencil),
            stencil_hash: stencil_hash(stencil),
            sizes: nodes.sizes().to_vec(),
            aggregate: nodes.rule(),
            algorithm: mapping.algorithm(),
            seed: mapping.seed(),
            flags,
            instance: instance_fingerprint(grid, stencil, nodes),
            edges: "directed".to_string(),
        }
    }

    /// Rebuilds the instance and checks it against the recorded hashes.
    pub fn instance(&self) -> Result<(Grid, Stencil, NodeConfig)> {
        let grid = Grid::with_periods(self.dims.clone(), self.periods.clone())?;
        let stencil = Stencil::try_from(self.stencil.clone())?;
        let nodes = NodeConfig::new(self.sizes.clone(), self.aggregate)?;
        if stencil_hash(&stencil) != self.stencil_hash
            || instance_fingerprint(&grid, &stencil, &nodes) != self.instance
        {
            return Err(Error::InstanceMismatch);
        }
        Ok((grid, stencil, nodes))
    }
}

pub fn render(header: &Header, mapping: &RankMapping) -> String {
    let mut out = format!(
        "# {}\n",
        serde_json::to_string(header).expect("header serialises")
    );
    for (old, new) in mapping.new_ranks().into_iter().enumerate() {
        out.push_str(&format!("{old} {new}\n"));
    }
    out
}

#[derive(Debug)]
pub struct MappingFile {
    pub header: Header,
    pub grid: Grid,
    pub stencil: Stencil,
    pub nodes: NodeConfig,
    pub mapping: RankMapping,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::NotBijective(msg.into())
}

pub fn parse(text: &str) -> Result<MappingFile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| bad("empty mapping file"))?;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| bad("first line must be the '#' JSON header"))?;
    let header: Header =
        serde_json::from_str(json.trim()).map_err(|e| bad(format!("unreadable header: {e}")))?;
    if header.format != FORMAT {
        return Err(bad(format!("unsupported format '{}'", header.format)));
    }
    let (grid, stencil, nodes) = header.instance()?;
    let p = grid.size();
    let mut new_ranks = vec![usize::MAX; p];
    let mut count = 0;
    for (lineno, line) in lines.enumerate() {
        let mut parts = line.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(old)), Some(Ok(new)), None) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(bad(format!("line {}: expected 'old new'", lineno + 2)));
        };
        if old >= p || new >= p {
            return Err(bad(format!(
                "line {}: rank out of range for {p} processes",
                lineno + 2
            )));
        }
        if new_ranks[old] != usize::MAX {
            return Err(bad(format!("line {}: rank {old} listed twice", lineno + 2)));
        }
        new_ranks[old] = new;
        count += 1;
    }
    if count != p {
        return Err(bad(format!("{count} lines for {p} processes")));
    }
    let mapping = RankMapping::from_new_ranks(&grid, &new_ranks, header.algorithm, header.seed)?;
    Ok(MappingFile {
        header,
        grid,
        stencil,
        nodes,
        mapping,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappers::random_map;
    use crate::stencil::Builtin;

    #[test]
    fn round_trip() {
        let g = Grid::with_periods(vec![3, 4], vec![true, false]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighborHops, 2).unwrap();
        let nodes = NodeConfig::new(vec![5, 7], Aggregate::Max).unwrap();
        let m = random_map(&g, 42);
        let header = Header::new(&g, &s, &nodes, &m, vec![]);
        let parsed = parse(&render(&header, &m)).unwrap();
        assert_eq!(parsed.header, header);
        assert_eq!(parsed.grid, g);
        assert_eq!(parsed.stencil, s);
        assert_eq!(parsed.nodes, nodes);
        assert_eq!(parsed.mapping, m);
    }

    #[test]
    fn tampered_header_rejected() {
        let g = Grid::new(vec![2, 2]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighbor, 2).unwrap();
        let nodes = NodeConfig::homogeneous(2, 2).unwrap();
        let m = crate::mappers::blocked_map(&g);
        let text = render(&Header::new(&g, &s, &nodes, &m, vec![]), &m);
        let tampered = text.replace("\"sizes\":[2,2]", "\"sizes\":[1,3]");
        assert!(matches!(parse(&tampered), Err(Error::InstanceMismatch)));
    }

    #[test]
    fn bad_bodies_rejected() {
        let g = Grid::new(vec![2, 2]).unwrap();
        let s = Stencil::builtin(Builtin::NearestNeighbor, 2).unwrap();
        let nodes = NodeConfig::homogeneous(2, 2).unwrap();
        let m = crate::mappers::blocked_map(&g);
        let text = render(&Header::new(&g, &s, &nodes, &m, vec![]), &m);
        let head = text.lines().next().unwrap();
        for body in [
            "0 0\n1 1\n2 2\n",
            "0 0\n1 1\n2 2\n2 3\n",
            "0 0\n1 1\n2 3\n3 3\n",
            "0 0\n1 x\n2 2\n3 3\n",
        ] {
            assert!(parse(&format!("{head}\n{body}")).is_err(), "{body:?}");
        }
    }
}
