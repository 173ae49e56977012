use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::address::Address;
use crate::deobfuscate::ImportStore;

/// Where the beneficiary address lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trick {
    /// String fragments returned by private pure functions in the contract.
    Fragments,
    /// A contract in an imported file supplies the address.
    Import,
}

/// How the fragments are put back together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assembly {
    /// Packed string decoded by a per-character nibble loop.
    DecodeLoop,
    /// Packed string returned from an address-typed function.
    AddressReturn,
    /// Hex integer literals rendered with `string(..)` and joined with `+`.
    HexNumbers,
}

/// Sinks that pay the caller back instead of a hidden beneficiary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Negative {
    MsgSender,
    Owner,
}

#[derive(Debug, Clone, Default)]
pub struct SynthOptions {
    pub trick: Option<Trick>,
    pub assembly: Option<Assembly>,
    /// Fragment count; drawn from 2..=8 when unset.
    pub fragments: Option<usize>,
    /// `Some(true)` forces threshold gating, `Some(false)` forbids it.
    pub threshold: Option<bool>,
    pub negative: Option<Negative>,
}

#[derive(Debug, Clone)]
pub struct SynthContract {
    pub source: String,
    pub contract_name: String,
    /// `(url, source)` pairs the contract imports.
    pub imports: Vec<(String, String)>,
    /// Address the sink really pays; `None` for caller-refund negatives.
    pub planted: Option<Address>,
    pub trick: Trick,
    pub assembly: Assembly,
    pub fragments: usize,
    pub threshold_wei: Option<u128>,
    pub negative: Option<Negative>,
}

impl SynthContract {
    pub fn import_store(&self) -> ImportStore {
        let mut store = ImportStore::new();
        for (url, src) in &self.imports {
            store.insert(url.clone(), src.clone());
        }
        store
    }
}

pub fn random_address<R: Rng>(rng: &mut R) -> Address {
    Address(rng.gen())
}

const VERBS: &[&str] = &["get", "fetch", "load", "call", "check", "parse", "find", "query", "start", "compute"];
const NOUNS: &[&str] = &[
    "Mempool", "Liquidity", "Router", "Pool", "Pair", "Token", "Profit", "Depth", "Edition", "Version",
    "Sol", "Short", "Long", "Offset", "Height", "Width", "Range", "Slice", "Chunk", "Deposit",
];
const SUFFIXES: &[&str] = &["", "Data", "Info", "Part", "Ref", "Key", "Id", "Len", "V2", "Core"];
const CONTRACT_NAMES: &[&str] = &[
    "UniswapFrontrunBot", "UniswapLiquidityBot", "PancakeSwapBot", "ArbitrageBot", "MEVBot", "SushiFlashBot",
];

/// Produces unique identifiers from a fixed vocabulary.
struct Namer {
    used: Vec<String>,
}

impl Namer {
    fn new() -> Self {
        Namer { used: Vec::new() }
    }

    fn function<R: Rng>(&mut self, rng: &mut R) -> String {
        loop {
            let name = format!(
                "{}{}{}",
                VERBS.choose(rng).unwrap(),
                NOUNS.choose(rng).unwrap(),
                SUFFIXES.choose(rng).unwrap()
            );
            if !self.used.contains(&name) {
                self.used.push(name.clone());
                return name;
            }
        }
    }

    fn variable<R: Rng>(&mut self, rng: &mut R) -> String {
        loop {
            let noun = NOUNS.choose(rng).unwrap();
            let name = format!("_{}{}", noun.to_lowercase(), SUFFIXES.choose(rng).unwrap());
            if !self.used.contains(&name) {
                self.used.push(name.clone());
                return name;
            }
        }
    }
}

/// Cut points splitting `len` characters into `k` non-empty pieces.
fn cut_points<R: Rng>(rng: &mut R, len: usize, k: usize) -> Vec<usize> {
    let mut points: Vec<usize> = (1..len).collect();
    points.shuffle(rng);
    let mut chosen: Vec<usize> = points.into_iter().take(k - 1).collect();
    chosen.sort_unstable();
    chosen
}

fn split_at_points(text: &str, points: &[usize]) -> Vec<String> {
    let mut out = Vec::new();
    let mut prev = 0;
    for &p in points.iter().chain(std::iter::once(&text.len())) {
        out.push(text[prev..p].to_string());
        prev = p;
    }
    out
}

fn decode_loop(name: &str, w: &mut String) {
    let _ = write!(
        w,
        "    function {name}(string memory _a) internal pure returns (address _parsedAddress) {{
        bytes memory tmp = bytes(_a);
        uint160 iaddr = 0;
        uint160 b1;
        uint160 b2;
        for (uint i = 2; i < 2 + 2 * 20; i += 2) {{
            iaddr *= 256;
            b1 = uint160(uint8(tmp[i]));
            b2 = uint160(uint8(tmp[i + 1]));
            if ((b1 >= 97) && (b1 <= 102)) {{
                b1 -= 87;
            }} else if ((b1 >= 65) && (b1 <= 70)) {{
                b1 -= 55;
            }} else if ((b1 >= 48) && (b1 <= 57)) {{
                b1 -= 48;
            }}
            if ((b2 >= 97) && (b2 <= 102)) {{
                b2 -= 87;
            }} else if ((b2 >= 65) && (b2 <= 70)) {{
                b2 -= 55;
            }} else if ((b2 >= 48) && (b2 <= 57)) {{
                b2 -= 48;
            }}
            iaddr += (b1 * 16 + b2);
        }}
        return address(iaddr);
    }}
"
    );
}

/// Emits the functions that rebuild `address` and returns the name of the
/// zero-argument function yielding it.
fn address_builder<R: Rng>(
    srng: &mut R,
    namer: &mut Namer,
    address: &Address,
    k: usize,
    assembly: Assembly,
    w: &mut String,
) -> String {
    let text = address.to_checksum();
    let builder = namer.function(srng);
    match assembly {
        Assembly::DecodeLoop | Assembly::AddressReturn => {
            let pieces = split_at_points(&text, &cut_points(srng, text.len(), k));
            let mut getters = Vec::new();
            for piece in &pieces {
                let g = namer.function(srng);
                let _ = writeln!(w, "    function {g}() private pure returns (string memory) {{return \"{piece}\";}}");
                getters.push(g);
            }
            let use_locals = srng.gen_bool(0.5);
            let packed = if use_locals {
                let mut locals = Vec::new();
                let mut body = String::new();
                for g in &getters {
                    let v = namer.variable(srng);
                    let _ = writeln!(body, "        string memory {v} = {g}();");
                    locals.push(v);
                }
                (body, format!("string(abi.encodePacked({}))", locals.join(", ")))
            } else {
                let calls: Vec<String> = getters.iter().map(|g| format!("{g}()")).collect();
                (String::new(), format!("string(abi.encodePacked({}))", calls.join(", ")))
            };
            if assembly == Assembly::DecodeLoop {
                let parser = namer.function(srng);
                decode_loop(&parser, w);
                let _ = write!(
                    w,
                    "    function {builder}() internal pure returns (address) {{\n{}        return {parser}({});\n    }}\n",
                    packed.0, packed.1
                );
            } else {
                let _ = write!(
                    w,
                    "    function {builder}() internal pure returns (address) {{\n{}        return {};\n    }}\n",
                    packed.0, packed.1
                );
            }
        }
        Assembly::HexNumbers => {
            let digits = &text[2..];
            let pieces = split_at_points(digits, &cut_points(srng, digits.len(), k));
            let mut body = String::new();
            let mut vars = Vec::new();
            for piece in &pieces {
                let v = namer.variable(srng);
                let _ = writeln!(body, "        uint {v} = 0x{piece};");
                vars.push(format!("string({v})"));
            }
            let full = namer.variable(srng);
            let _ = write!(
                w,
                "    function {builder}() internal pure returns (address) {{\n{body}        string memory {full} = \"0x\" + {};\n        return {full};\n    }}\n",
                vars.join(" + ")
            );
        }
    }
    builder
}

fn noise<R: Rng>(srng: &mut R, namer: &mut Namer, w: &mut String) {
    match srng.gen_range(0..4) {
        0 => {
            let f = namer.function(srng);
            let _ = writeln!(w, "    function {f}() public pure returns (string memory) {{return \"Running\";}}");
        }
        1 => {
            let v = namer.variable(srng);
            let _ = writeln!(w, "    uint {v} = {};", srng.gen_range(1..1_000_000u32));
        }
        2 => {
            let _ = writeln!(w, "    event Log(string _msg);");
        }
        _ => {
            let f = namer.function(srng);
            let v = namer.variable(srng);
            let _ = write!(
                w,
                "    function {f}(uint {v}) internal pure returns (uint) {{\n        return {v} * 2 + 1;\n    }}\n"
            );
        }
    }
}

/// Generates one obfuscated contract. Everything except the planted address
/// derives from `structure_seed`, so two calls differing only in `address`
/// produce clones that differ only in the address literals.
pub fn generate_contract(structure_seed: u64, address: Address, options: &SynthOptions) -> SynthContract {
    let mut srng = ChaCha8Rng::seed_from_u64(structure_seed);
    let trick = options.trick.unwrap_or(if srng.gen_bool(0.5) { Trick::Fragments } else { Trick::Import });
    let assembly = options.assembly.unwrap_or_else(|| {
        *[Assembly::DecodeLoop, Assembly::AddressReturn, Assembly::HexNumbers].choose(&mut srng).unwrap()
    });
    let k = options.fragments.unwrap_or_else(|| srng.gen_range(2..=8));
    let gated = options.threshold.unwrap_or_else(|| srng.gen_bool(0.3));
    let threshold = gated.then(|| srng.gen_range(1u128..10_000) * 10u128.pow(14) + 1);
    let contract_name = CONTRACT_NAMES.choose(&mut srng).unwrap().to_string();
    let mut namer = Namer::new();
    let mut imports = Vec::new();

    let mut w = String::new();
    let _ = writeln!(w, "pragma solidity ^0.6.6;");
    let mut members = String::new();

    // Destination expression for the real sink.
    let dest = match trick {
        Trick::Fragments => {
            let builder = address_builder(&mut srng, &mut namer, &address, k, assembly, &mut members);
            format!("{builder}()")
        }
        Trick::Import => {
            let user = format!("{}{}", NOUNS.choose(&mut srng).unwrap().to_lowercase(), srng.gen_range(1..100));
            let url = format!("https://raw.githubusercontent.com/{user}/uniswap/main/v2-periphery.sol");
            let manager_ty = "Manager".to_string();
            let mut lib = String::new();
            let _ = writeln!(lib, "pragma solidity ^0.6.6;\ncontract {manager_ty} {{");
            let getter = if srng.gen_bool(0.5) {
                let g = namer.function(&mut srng);
                let _ = writeln!(lib, "    function {g}() public pure returns (address) {{\n        return {};\n    }}", address.to_checksum());
                g
            } else {
                let mut inner = String::new();
                let builder = address_builder(&mut srng, &mut namer, &address, k, assembly, &mut inner);
                let g = namer.function(&mut srng);
                lib.push_str(&inner);
                let _ = writeln!(lib, "    function {g}() public pure returns (address) {{\n        return {builder}();\n    }}");
                g
            };
            lib.push_str("}\n");
            imports.push((url.clone(), lib));
            let _ = writeln!(w, "import \"{url}\";");
            let field = namer.variable(&mut srng).trim_start_matches('_').to_string();
            let _ = writeln!(members, "    {manager_ty} {field};");
            format!("{field}.{getter}()")
        }
    };

    for _ in 0..srng.gen_range(0..3) {
        noise(&mut srng, &mut namer, &mut members);
    }

    let refund_to = match options.negative {
        Some(Negative::Owner) => {
            let _ = write!(members, "    address owner;\n    constructor() public {{\n        owner = msg.sender;\n    }}\n");
            Some("owner".to_string())
        }
        Some(Negative::MsgSender) => Some("msg.sender".to_string()),
        None => None,
    };
    let sink_dest = refund_to.clone().unwrap_or(dest);

    let mut start = String::new();
    let drain = if srng.gen_bool(0.5) {
        format!("        payable({sink_dest}).transfer(address(this).balance);\n")
    } else {
        let a = namer.variable(&mut srng);
        let b = namer.variable(&mut srng);
        format!(
            "        address {a} = {sink_dest};\n        address payable {b} = payable({a});\n        {b}.transfer(address(this).balance);\n"
        )
    };
    if let Some(t) = threshold {
        let limit = namer.variable(&mut srng);
        let check = namer.function(&mut srng);
        let _ = write!(
            members,
            "    uint256 {limit} = {t};\n    function {check}() internal view returns (bool) {{\n        if (address(this).balance > {limit}) {{\n            return true;\n        }} else {{\n            return false;\n        }}\n    }}\n"
        );
        let _ = write!(
            start,
            "        if ({check}()) {{\n    {}        }} else {{\n            payable({sink_dest}).transfer(0);\n        }}\n",
            drain.replace("\n        ", "\n            ")
        );
    } else {
        start.push_str(&drain);
    }
    let _ = write!(members, "    function start() public payable {{\n{start}    }}\n");
    let _ = write!(w, "contract {contract_name} {{\n    receive() external payable {{}}\n{members}}}\n");

    SynthContract {
        source: w,
        contract_name,
        imports,
        planted: if refund_to.is_some() { None } else { Some(address) },
        trick,
        assembly,
        fragments: k,
        threshold_wei: threshold,
        negative: options.negative,
    }
}

// ----- random subset contracts for parser round trips --------------------

const ELEMENTARY: &[&str] = &["uint", "uint256", "uint160", "bool", "address", "string memory", "bytes memory"];

fn rand_ident<R: Rng>(rng: &mut R) -> String {
    let base = ["a", "b", "x", "amount", "total", "owner", "value", "tmp", "pool"].choose(rng).unwrap();
    format!("{base}{}", rng.gen_range(0..5))
}

fn rand_expr<R: Rng>(rng: &mut R, depth: u32) -> String {
    if depth == 0 {
        return match rng.gen_range(0..6) {
            0 => rng.gen_range(0..100_000u32).to_string(),
            1 => format!("\"{}\"", ["", "0x", "abc", "a\\\"q", "tab\\t"].choose(rng).unwrap()),
            2 => ["true", "false"].choose(rng).unwrap().to_string(),
            3 => "msg.sender".to_string(),
            4 => format!("0x{:x}", rng.gen_range(1..0xffffu32)),
            _ => rand_ident(rng),
        };
    }
    let sub = |rng: &mut R| rand_expr(rng, depth - 1);
    match rng.gen_range(0..12) {
        0 => format!("({} {} {})", sub(rng), ["+", "-", "*", "/", "%", "**"].choose(rng).unwrap(), sub(rng)),
        1 => format!("({} {} {})", sub(rng), ["<", "<=", ">", ">=", "==", "!="].choose(rng).unwrap(), sub(rng)),
        2 => format!("({} {} {})", sub(rng), ["&&", "||", "&", "|", "^", "<<", ">>"].choose(rng).unwrap(), sub(rng)),
        3 => format!("!{}", sub(rng)),
        4 => format!("{}({})", rand_ident(rng), (0..rng.gen_range(0..3)).map(|_| sub(rng)).collect::<Vec<_>>().join(", ")),
        5 => format!("abi.encodePacked({}, {})", sub(rng), sub(rng)),
        6 => format!("payable({})", sub(rng)),
        7 => format!("uint160({})", sub(rng)),
        8 => format!("{}[{}]", rand_ident(rng), sub(rng)),
        9 => format!("({} ? {} : {})", sub(rng), sub(rng), sub(rng)),
        10 => "address(this).balance".to_string(),
        _ => format!("{}.{}", rand_ident(rng), rand_ident(rng)),
    }
}

fn rand_stmt<R: Rng>(rng: &mut R, depth: u32, indent: usize, out: &mut String) {
    let pad = "    ".repeat(indent);
    let choice = if depth == 0 { rng.gen_range(0..5) } else { rng.gen_range(0..9) };
    match choice {
        0 => {
            let _ = writeln!(out, "{pad}{} {} = {};", ELEMENTARY.choose(rng).unwrap(), rand_ident(rng), rand_expr(rng, 2));
        }
        1 => {
            let _ = writeln!(out, "{pad}{} {} {};", rand_ident(rng), ["=", "+=", "-=", "*="].choose(rng).unwrap(), rand_expr(rng, 2));
        }
        2 => {
            let _ = writeln!(out, "{pad}payable({}).transfer({});", rand_expr(rng, 1), rand_expr(rng, 1));
        }
        3 => {
            let _ = writeln!(out, "{pad}return {};", rand_expr(rng, 2));
        }
        4 => {
            // outside the subset
            let _ = writeln!(out, "{pad}emit Log({});", rand_expr(rng, 1));
        }
        5 | 6 => {
            let _ = writeln!(out, "{pad}if ({}) {{", rand_expr(rng, 2));
            for _ in 0..rng.gen_range(0..3) {
                rand_stmt(rng, depth - 1, indent + 1, out);
            }
            if rng.gen_bool(0.5) {
                let _ = writeln!(out, "{pad}}} else {{");
                rand_stmt(rng, depth - 1, indent + 1, out);
            }
            let _ = writeln!(out, "{pad}}}");
        }
        7 => {
            let i = rand_ident(rng);
            let _ = writeln!(out, "{pad}for (uint {i} = 0; {i} < {}; {i}++) {{", rng.gen_range(1..50));
            rand_stmt(rng, depth - 1, indent + 1, out);
            let _ = writeln!(out, "{pad}}}");
        }
        _ => {
            let _ = writeln!(out, "{pad}while ({}) {{", rand_expr(rng, 1));
            rand_stmt(rng, depth - 1, indent + 1, out);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

/// A random contract mixing subset constructs with a few opaque ones.
pub fn random_subset_contract<R: Rng>(rng: &mut R) -> String {
    let mut out = String::from("pragma solidity ^0.8.0;\n");
    let _ = writeln!(out, "contract C{} {{", rng.gen_range(0..1000));
    let mut names = Vec::new();
    for _ in 0..rng.gen_range(0..4) {
        let _ = writeln!(out, "    {} {};", ["uint", "address", "bool", "string"].choose(rng).unwrap(), rand_ident(rng));
    }
    for _ in 0..rng.gen_range(1..5) {
        let name = loop {
            let n = format!("f{}", rng.gen_range(0..100));
            if !names.contains(&n) {
                break n;
            }
        };
        names.push(name.clone());
        let params: Vec<String> = (0..rng.gen_range(0..3))
            .map(|i| format!("{} p{i}", ELEMENTARY.choose(rng).unwrap()))
            .collect();
        let vis = ["public", "internal", "private", "external"].choose(rng).unwrap();
        let mutability = ["", " view", " pure", " payable"].choose(rng).unwrap();
        let _ = writeln!(out, "    function {name}({}) {vis}{mutability} returns (uint) {{", params.join(", "));
        for _ in 0..rng.gen_range(0..5) {
            rand_stmt(rng, 2, 2, &mut out);
        }
        out.push_str("    }\n");
    }
    out.push_str("}\n");
    out
}
