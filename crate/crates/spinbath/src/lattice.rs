//! Diamond-cubic crystal sites, random isotopic occupation of the bath and
//! the equivalent-pair shell combinatorics.
//!
//! Sites are integer vectors n in quarter-lattice-parameter units; real
//! positions are (a0/4) n. The crystal is a simple cubic lattice with an
//! 8-site basis, so n mod 4 must reduce to one of the basis vectors.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{invalid, Result};

/// Conventional cubic lattice parameter of silicon, angstrom.
pub const A0_SILICON: f64 = 5.43;
/// Natural fractional abundance of 29Si.
pub const NAT_ABUNDANCE_29SI: f64 = 0.0467;
/// Name of the RNG algorithm used for bath realisations, recorded in
/// output metadata so runs stay reproducible across builds.
pub const BATH_RNG: &str = "chacha20";

/// The 8-site basis of the diamond cubic structure in quarter-cell units.
pub const DIAMOND_BASIS: [[i32; 3]; 8] = [
    [0, 0, 0],
    [0, 2, 2],
    [2, 0, 2],
    [2, 2, 0],
    [1, 1, 3],
    [1, 3, 1],
    [3, 1, 1],
    [3, 3, 3],
];

/// One atomic site, stored as the integer vector n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LatticeSite {
    pub n: [i32; 3],
}

impl LatticeSite {
    pub fn new(n: [i32; 3]) -> Result<Self> {
        let site = Self { n };
        if !site.is_valid() {
            return Err(invalid(format!("{n:?} is not a diamond-cubic site")));
        }
        Ok(site)
    }

    /// Membership test: n mod 4 must be one of the 8 basis vectors.
    pub fn is_valid(&self) -> bool {
        let m = [
            self.n[0].rem_euclid(4),
            self.n[1].rem_euclid(4),
            self.n[2].rem_euclid(4),
        ];
        DIAMOND_BASIS.iter().any(|b| *b == m)
    }

    pub fn position_angstrom(&self) -> [f64; 3] {
        [
            self.n[0] as f64 * A0_SILICON / 4.0,
            self.n[1] as f64 * A0_SILICON / 4.0,
            self.n[2] as f64 * A0_SILICON / 4.0,
        ]
    }

    pub fn distance_angstrom(&self, other: &LatticeSite) -> f64 {
        let dx = (self.n[0] - other.n[0]) as f64;
        let dy = (self.n[1] - other.n[1]) as f64;
        let dz = (self.n[2] - other.n[2]) as f64;
        (dx * dx + dy * dy + dz * dz).sqrt() * A0_SILICON / 4.0
    }

    /// Sorted absolute coordinates; sites sharing the key carry the same
    /// isotropic contact coupling by cubic symmetry.
    pub fn shell_key(&self) -> [i32; 3] {
        let mut k = [self.n[0].abs(), self.n[1].abs(), self.n[2].abs()];
        k.sort_unstable();
        k
    }
}

/// All sites with every coordinate of the position inside the cube
/// |x|,|y|,|z| <= half_side (angstrom), in lexicographic n order.
pub fn generate_sites_box(half_side_angstrom: f64) -> Result<Vec<LatticeSite>> {
    if !(half_side_angstrom > 0.0) {
        return Err(invalid("box half side must be positive"));
    }
    let nmax = (4.0 * half_side_angstrom / A0_SILICON).floor() as i32;
    let mut sites = Vec::new();
    let cells = nmax / 4 + 2;
    for tx in -cells..=cells {
        for ty in -cells..=cells {
            for tz in -cells..=cells {
                for b in DIAMOND_BASIS {
                    let n = [b[0] + 4 * tx, b[1] + 4 * ty, b[2] + 4 * tz];
                    if n.iter().all(|&c| c.abs() <= nmax) {
                        sites.push(LatticeSite { n });
                    }
                }
            }
        }
    }
    sites.sort_unstable();
    Ok(sites)
}

/// The plain [-N, N]-cell lattice: 8 N^3 conventional cells and therefore
/// exactly 64 N^3 atomic sites, in lexicographic n order.
pub fn generate_sites_cells(n_cells: u32) -> Vec<LatticeSite> {
    let n = n_cells as i32;
    let mut sites = Vec::with_capacity(64 * (n_cells as usize).pow(3));
    for tx in -n..n {
        for ty in -n..n {
            for tz in -n..n {
                for b in DIAMOND_BASIS {
                    sites.push(LatticeSite {
                        n: [b[0] + 4 * tx, b[1] + 4 * ty, b[2] + 4 * tz],
                    });
                }
            }
        }
    }
    sites.sort_unstable();
    sites
}

/// Sites enumerated by the shell census for range N. Per-coordinate bounds
/// follow the coordinate residue so that every symmetry shell is complete:
/// coordinates congruent to 0 mod 4 run to |n| <= 4N, those congruent to
/// 2 mod 4 to |n| <= 4N - 2, odd ones to |n| <= 4N - 1.
fn census_sites(n_cells: u32) -> Vec<LatticeSite> {
    let n = n_cells as i32;
    let bound = |coord: i32| -> bool {
        match coord.rem_euclid(4) {
            0 => coord.abs() <= 4 * n,
            2 => coord.abs() <= 4 * n - 2,
            _ => coord.abs() <= 4 * n - 1,
        }
    };
    let mut sites = Vec::with_capacity(64 * (n_cells as usize).pow(3));
    let lim = 4 * n;
    for x in -lim..=lim {
        if !bound(x) {
            continue;
        }
        for y in -lim..=lim {
            if !bound(y) {
                continue;
            }
            for z in -lim..=lim {
                if !bound(z) {
                    continue;
                }
                let site = LatticeSite { n: [x, y, z] };
                if site.is_valid() {
                    sites.push(site);
                }
            }
        }
    }
    sites
}

/// A populated bath: occupied sites, their initial spin projections and
/// the generation parameters needed to reproduce it.
#[derive(Debug, Clone)]
pub struct BathRealisation {
    pub sites: Vec<LatticeSite>,
    /// +1 for spin up, -1 for spin down, one entry per occupied site.
    pub initial_states: Vec<i8>,
    pub abundance: f64,
    pub seed: u64,
    pub box_half_side_angstrom: f64,
}

impl BathRealisation {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Write the realisation as CSV lines `n1,n2,n3,state`.
    pub fn dump_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n1,n2,n3,state")?;
        for (site, state) in self.sites.iter().zip(&self.initial_states) {
            writeln!(w, "{},{},{},{}", site.n[0], site.n[1], site.n[2], state)?;
        }
        Ok(())
    }

    /// Read a realisation dumped by [`BathRealisation::dump_csv`].
    pub fn load_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut sites = Vec::new();
        let mut states = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (idx == 0 && line.starts_with("n1")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(crate::Error::Parse(format!(
                    "bath CSV line {}: expected 4 fields",
                    idx + 1
                )));
            }
            let parse = |s: &str| -> Result<i32> {
                s.trim()
                    .parse()
                    .map_err(|_| crate::Error::Parse(format!("bad integer '{s}'")))
            };
            let site = LatticeSite::new([parse(fields[0])?, parse(fields[1])?, parse(fields[2])?])?;
            let state = parse(fields[3])?;
            if state != 1 && state != -1 {
                return Err(crate::Error::Parse(format!("bad state '{state}'")));
            }
            sites.push(site);
            states.push(state as i8);
        }
        let half = sites
            .iter()
            .flat_map(|s| s.position_angstrom())
            .fold(0.0_f64, |acc, c| acc.max(c.abs()));
        Ok(Self {
            sites,
            initial_states: states,
            abundance: f64::NAN,
            seed: 0,
            box_half_side_angstrom: half,
        })
    }
}

/// Occupy sites independently with probability `abundance` and assign each
/// occupied site spin up or down with probability 1/2, reproducibly from
/// the seed. The origin site hosts the donor and is never occupied.
pub fn populate(sites: &[LatticeSite], abundance: f64, seed: u64) -> Result<BathRealisation> {
    if !(0.0..=1.0).contains(&abundance) {
        return Err(invalid("abundance must lie in [0, 1]"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut occupied = Vec::new();
    let mut states = Vec::new();
    let mut half = 0.0_f64;
    for site in sites {
        if site.n == [0, 0, 0] {
            continue;
        }
        if rng.gen::<f64>() < abundance {
            occupied.push(*site);
            states.push(if rng.gen::<bool>() { 1 } else { -1 });
        }
        for c in site.position_angstrom() {
            half = half.max(c.abs());
        }
    }
    Ok(BathRealisation {
        sites: occupied,
        initial_states: states,
        abundance,
        seed,
        box_half_side_angstrom: half,
    })
}

/// Shell census over a [-N, N]-cell lattice: closed-form shell counts per
/// multiplicity, expected equivalent pairs per shell, totals and density.
#[derive(Debug, Clone)]
pub struct ShellCensus {
    pub n_cells: u32,
    pub abundance: f64,
    /// Multiplicity -> number of complete shells.
    pub shell_counts: BTreeMap<u32, f64>,
    /// Multiplicity -> expected equivalent pairs per shell.
    pub pairs_per_shell: BTreeMap<u32, f64>,
    /// Expected total number of equivalent pairs.
    pub total_pairs: f64,
    /// Multiplicity -> mean equivalent pairs per cubic cell.
    pub density: BTreeMap<u32, f64>,
}

/// Expected number of flip-flop partners within one shell of `n_s`
/// equivalent sites under binomial occupation:
/// sum_k C(n_s,k) p^k (1-p)^(n_s-k) k(k-1)/2.
pub fn expected_pairs_per_shell(n_s: u32, abundance: f64) -> f64 {
    let n = n_s as usize;
    let q = 1.0 - abundance;
    if abundance == 0.0 {
        return 0.0;
    }
    // Binomial pmf by multiplicative recurrence.
    let mut pmf = q.powi(n as i32);
    let mut total = 0.0;
    for k in 0..=n {
        if k > 0 {
            pmf *= (n - k + 1) as f64 / k as f64 * (abundance / q);
        }
        total += pmf * (k as f64) * (k as f64 - 1.0) / 2.0;
    }
    total
}

/// Closed-form census for a lattice of [-N, N] cells at the given
/// occupation probability.
pub fn shell_census(n_cells: u32, abundance: f64) -> Result<ShellCensus> {
    if n_cells < 1 {
        return Err(invalid("census needs N >= 1 cells"));
    }
    if !(0.0..=1.0).contains(&abundance) {
        return Err(invalid("abundance must lie in [0, 1]"));
    }
    let n = n_cells as f64;
    let mut shell_counts = BTreeMap::new();
    shell_counts.insert(48, 2.0 / 3.0 * n.powi(3) - n * n + n / 3.0);
    shell_counts.insert(24, 4.0 / 3.0 * n * (n * n - 1.0) + n * n);
    shell_counts.insert(12, 4.0 * n * n);
    shell_counts.insert(8, n);
    shell_counts.insert(6, n);
    shell_counts.insert(4, 2.0 * n);
    let mut pairs_per_shell = BTreeMap::new();
    let mut density = BTreeMap::new();
    let mut total_pairs = 0.0;
    let volume = (2.0 * n).powi(3);
    for (&ns, &count) in &shell_counts {
        let zeta = expected_pairs_per_shell(ns, abundance);
        total_pairs += zeta * count;
        pairs_per_shell.insert(ns, zeta);
        density.insert(ns, zeta * count / volume);
    }
    Ok(ShellCensus {
        n_cells,
        abundance,
        shell_counts,
        pairs_per_shell,
        total_pairs,
        density,
    })
}

/// Brute-force shell enumeration: group the census lattice by shell key
/// and histogram the group sizes. Oracle for the closed forms.
pub fn shell_census_brute(n_cells: u32) -> BTreeMap<u32, u32> {
    let mut groups: BTreeMap<[i32; 3], u32> = BTreeMap::new();
    for site in census_sites(n_cells) {
        if site.n == [0, 0, 0] {
            continue;
        }
        *groups.entry(site.shell_key()).or_insert(0) += 1;
    }
    let mut histogram = BTreeMap::new();
    for size in groups.into_values() {
        *histogram.entry(size).or_insert(0) += 1;
    }
    histogram
}

/// Equivalence mode for [`equivalent_sites`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquivalenceMode {
    /// Same isotropic contact coupling: any allowed permutation and sign
    /// pattern of the coordinates.
    Isotropic,
    /// Additionally require the same squared projection on the field
    /// direction, (n_B . n)^2.
    FieldRestricted([f64; 3]),
}

/// All lattice sites equivalent to `site` (including itself).
pub fn equivalent_sites(site: &LatticeSite, mode: EquivalenceMode) -> Result<Vec<LatticeSite>> {
    if !site.is_valid() {
        return Err(invalid("input site is not on the lattice"));
    }
    let key = site.shell_key();
    let proj2 = |n: &[i32; 3], d: &[f64; 3]| -> f64 {
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let dot = d[0] * n[0] as f64 + d[1] * n[1] as f64 + d[2] * n[2] as f64;
        (dot / len).powi(2)
    };
    let mut out = std::collections::BTreeSet::new();
    let perms = [
        [0usize, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for perm in perms {
        let base = [key[perm[0]], key[perm[1]], key[perm[2]]];
        for signs in 0..8u32 {
            let candidate = LatticeSite {
                n: [
                    if signs & 1 != 0 { -base[0] } else { base[0] },
                    if signs & 2 != 0 { -base[1] } else { base[1] },
                    if signs & 4 != 0 { -base[2] } else { base[2] },
                ],
            };
            if !candidate.is_valid() {
                continue;
            }
            if let EquivalenceMode::FieldRestricted(dir) = mode {
                if (proj2(&candidate.n, &dir) - proj2(&site.n, &dir)).abs() > 1e-9 {
                    continue;
                }
            }
            out.insert(candidate);
        }
    }
    Ok(out.into_iter().collect())
}
