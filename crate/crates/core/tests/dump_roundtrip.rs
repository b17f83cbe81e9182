use proptest::prelude::*;
use taxrank::ingest::{
    assemble_edges, parse_categorylinks_dump, parse_page_dump, CategoryLinkRecord, DumpSchema, LinkType,
    PageRecord,
};
use taxrank::NodeKind;

fn sql_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '"' => out.push_str("\\\""),
            '\0' => out.push_str("\\0"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn page_dump(records: &[PageRecord], per_statement: usize) -> String {
    let mut out = String::from("-- MySQL dump\n/*!40101 SET NAMES binary*/;\n");
    for chunk in records.chunks(per_statement.max(1)) {
        out.push_str("INSERT INTO `page` VALUES ");
        let rows: Vec<String> = chunk
            .iter()
            .map(|r| {
                format!(
                    "({},{},{},'',0,0,0.{},'20180301000000',NULL,{},42,'wikitext',NULL)",
                    r.page_id,
                    r.namespace,
                    sql_quote(&r.title),
                    r.page_id % 997,
                    r.page_id * 3
                )
            })
            .collect();
        out.push_str(&rows.join(","));
        out.push_str(";\n");
    }
    out
}

fn link_dump(records: &[CategoryLinkRecord], per_statement: usize) -> String {
    let mut out = String::new();
    for chunk in records.chunks(per_statement.max(1)) {
        out.push_str("INSERT INTO `categorylinks` VALUES ");
        let rows: Vec<String> = chunk
            .iter()
            .map(|r| {
                let t = match r.cl_type {
                    LinkType::Page => "page",
                    LinkType::Subcat => "subcat",
                    LinkType::File => "file",
                };
                format!(
                    "({},{},'SORT','2018-03-01 00:00:00','','uca-default','{t}')",
                    r.cl_from,
                    sql_quote(&r.cl_to)
                )
            })
            .collect();
        out.push_str(&rows.join(","));
        out.push_str(";\n");
    }
    out
}

fn title() -> impl Strategy<Value = String> {
    "[A-Za-z0-9_àèéìòù'\"\\\\(),; ]{1,24}"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pages_roundtrip(
        records in prop::collection::vec((0i64..1_000_000, prop::sample::select(vec![0i64, 14]), title()), 0..200),
        per in 1usize..50,
    ) {
        let records: Vec<PageRecord> = records
            .into_iter()
            .map(|(page_id, namespace, title)| PageRecord { page_id, namespace, title })
            .collect();
        let sql = page_dump(&records, per);
        let parsed: Vec<PageRecord> = parse_page_dump(sql.as_bytes(), &DumpSchema::default())
            .collect::<Result<_, _>>()
            .unwrap();
        prop_assert_eq!(parsed, records);
    }

    #[test]
    fn links_roundtrip(
        records in prop::collection::vec((0i64..1_000_000, title(), prop::sample::select(vec![LinkType::Page, LinkType::Subcat, LinkType::File])), 0..200),
        per in 1usize..50,
    ) {
        let records: Vec<CategoryLinkRecord> = records
            .into_iter()
            .map(|(cl_from, cl_to, cl_type)| CategoryLinkRecord { cl_from, cl_to, cl_type })
            .collect();
        let sql = link_dump(&records, per);
        let parsed: Vec<CategoryLinkRecord> = parse_categorylinks_dump(sql.as_bytes(), &DumpSchema::default())
            .collect::<Result<_, _>>()
            .unwrap();
        let expected: Vec<_> = records.into_iter().filter(|r| r.cl_type != LinkType::File).collect();
        prop_assert_eq!(parsed, expected);
    }
}

#[test]
fn other_namespaces_filtered_and_counted() {
    let records = vec![
        PageRecord { page_id: 1, namespace: 0, title: "Recessione".into() },
        PageRecord { page_id: 2, namespace: 2, title: "Utente".into() },
        PageRecord { page_id: 3, namespace: 14, title: "Economia".into() },
    ];
    let sql = page_dump(&records, 2);
    let mut reader = parse_page_dump(sql.as_bytes(), &DumpSchema::default());
    let ids: Vec<i64> = reader.by_ref().map(|r| r.unwrap().page_id).collect();
    assert_eq!(ids, vec![1, 3]);
    assert_eq!(reader.tuples_read(), 3);
}

#[test]
fn malformed_tuples_are_counted_not_fatal() {
    let sql = "INSERT INTO `page` VALUES (1,0,'A'),(2,0,oops),(3,0,'B'),(x,0,'C'),(4,0,'D');\n\
               INSERT INTO `page` VALUES (5,0,'E'),(6,0,'broken\0'),(7,14,'F');\n";
    let mut reader = parse_page_dump(sql.as_bytes(), &DumpSchema::default());
    let results: Vec<_> = reader.by_ref().collect();
    let ok: Vec<i64> = results.iter().filter_map(|r| r.as_ref().ok()).map(|p| p.page_id).collect();
    assert_eq!(ok, vec![1, 3, 4, 5, 7]);
    assert_eq!(reader.malformed_count(), 3);
}

#[test]
fn end_to_end_assembly() {
    let pages = vec![
        PageRecord { page_id: 123, namespace: 0, title: "Recessione".into() },
        PageRecord { page_id: 7, namespace: 14, title: "Economia".into() },
        PageRecord { page_id: 8, namespace: 14, title: "Scienze_sociali".into() },
    ];
    let links = vec![
        CategoryLinkRecord { cl_from: 123, cl_to: "Economia".into(), cl_type: LinkType::Page },
        CategoryLinkRecord { cl_from: 7, cl_to: "Scienze_sociali".into(), cl_type: LinkType::Subcat },
        CategoryLinkRecord { cl_from: 7, cl_to: "Senza_pagina".into(), cl_type: LinkType::Subcat },
        CategoryLinkRecord { cl_from: 123, cl_to: "Economia".into(), cl_type: LinkType::Page },
    ];
    let p = page_dump(&pages, 10);
    let l = link_dump(&links, 3);
    let schema = DumpSchema::default();
    let assembled = assemble_edges(
        parse_page_dump(p.as_bytes(), &schema),
        parse_categorylinks_dump(l.as_bytes(), &schema),
    );
    assert_eq!(assembled.report.pages_read, 3);
    assert_eq!(assembled.report.links_read, 4);
    assert_eq!(assembled.report.dangling_links, 1);
    assert_eq!(assembled.report.malformed_tuples, 0);
    let g = assembled.into_builder().build().unwrap();
    assert_eq!(g.edge_count(), 2);
    let r = g.resolve("Recessione", NodeKind::Article).unwrap();
    let e = g.resolve("Economia", NodeKind::Category).unwrap();
    assert_eq!(g.parents(r), &[e]);
}
