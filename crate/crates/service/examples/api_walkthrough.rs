//! Drives the marketplace over HTTP: configure the agents, report damage,
//! let one simulated day pass and read the decided case back.

use serde_json::{json, Value};
use tokio::net::TcpListener;

use lcw_service::{Service, ServiceConfig};

pub async fn run() -> Value {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = ServiceConfig { data_dir: dir.path().to_owned(), port: 0, ..ServiceConfig::default() };
    let service = Service::open_with(&config, false).expect("data directory");
    let listener = TcpListener::bind("127.0.0.1:0").await.expect("bind");
    let base = format!("http://{}", listener.local_addr().expect("address"));
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(service.run(listener, async {
        let _ = stopped.await;
    }));

    let http = reqwest::Client::new();
    let call = |method: reqwest::Method, path: &str, body: Value| {
        let req = http.request(method, format!("{base}{path}")).json(&body);
        async move { req.send().await.expect("request").json::<Value>().await.expect("json") }
    };
    use reqwest::Method as M;

    for (product, admin) in [("bb-claire", "claire"), ("bb-reese-1", "reese")] {
        call(
            M::POST,
            "/api/twins",
            json!({
                "product_id": product, "kind": "Item", "model_id": "BikeBattery-36V",
                "manufacturer": "Voltara", "parent": null, "connectivity": true, "administrator": admin,
            }),
        )
        .await;
    }
    call(
        M::PUT,
        "/api/agents/administrators/claire/config",
        json!({ "constraints": {
        "bb-claire": { "max_cost": 40000, "max_duration_days": 6 } } }),
    )
    .await;
    for (provider, model, price, days) in
        [("rebecca", "SendInRepair", 35000, 14), ("robert", "SendInRepair", 45000, 5), ("reese", "Exchange", 40000, 4)]
    {
        call(
            M::PUT,
            &format!("/api/agents/providers/{provider}/config"),
            json!({ "catalog": [{
            "matcher": "BikeBattery*", "model": model, "price": price, "promised_duration_days": days }] }),
        )
        .await;
    }
    call(
        M::POST,
        "/api/twins/twin-bb-claire/assessments",
        json!({
            "recorded_by": "claire-phone",
            "findings": [{ "component_path": "main_connection_plug", "damage_code": "plug_damaged",
                           "severity": "Major", "measurements": [] }],
        }),
    )
    .await;

    // day 0: request and offers; day 1: the offer window closes
    call(M::POST, "/api/sim/tick", json!({ "days": 0 })).await;
    call(M::POST, "/api/sim/tick", json!({})).await;
    let case = call(M::GET, "/api/cases/case-0001", Value::Null).await;

    stop.send(()).expect("server running");
    server.await.expect("join").expect("clean shutdown");
    case
}

#[allow(dead_code)]
#[tokio::main]
async fn main() {
    let view = run().await;
    let case = &view["case"];
    println!("case {} is {}", case["case_id"], case["state"]);
    for offer in case["offers"].as_array().into_iter().flatten() {
        println!(
            "  {:<8} {:>6} cents {:>3} days {}",
            offer["provider_id"].as_str().unwrap_or("?"),
            offer["price"],
            offer["promised_duration_days"],
            offer["model"].as_str().unwrap_or("?")
        );
    }
    println!("accepted: {}", case["decision"]);
}
