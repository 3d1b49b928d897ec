#include "text_bank.hpp"

namespace chromabehave::synth::text {

namespace {

const std::vector<std::string> kDisgruntled = {
    "I am sick of being ignored by management in this place. Nobody values the work I do and they keep piling more on "
    "me while taking the credit. This company does not deserve loyal people and I will not stay quiet any longer.",
    "Management treats us like disposable parts. After years of overtime I was passed over again for someone who "
    "barely shows up. I am done pretending this is fair and everyone should know how rotten it is here.",
    "They cut our bonuses while the executives collect millions. I have had enough of the lies and the broken promises. "
    "Someone has to expose how this company really operates behind closed doors.",
    "Another pointless reorganization and another round of insults from the top. I was humiliated in front of my team "
    "for a mistake that was never mine. Resentment is all I feel when I walk into this building.",
    "I warned them about the problems months ago and they ignored me. Now they blame me for the failure. This place is "
    "toxic, the bosses are incompetent, and I refuse to keep covering for their disasters.",
    "My supervisor keeps undermining me and spreading rumors. HR does nothing because they protect their friends. I am "
    "furious and I want everyone to see the hypocrisy of this so called leadership.",
    "Years of dedication and what do I get? A demotion disguised as a promotion and a smaller office. I hate this "
    "company and the cowards who run it. They will regret how they treated me.",
    "Every meeting is another reminder that nobody listens. Ideas get stolen, complaints get buried, and loyal staff "
    "get punished. I am angry and I will not let them silence me again.",
    "The layoffs were handled with contempt. Friends were escorted out like criminals while managers laughed about it. "
    "I am disgusted and I no longer feel any obligation to protect this organization.",
    "I was promised a raise three times and denied it three times. Enough is enough. The executives are greedy liars "
    "and I am going to make sure the whole staff hears the truth.",
    "Unfair reviews, impossible deadlines, endless blame. I have lost all respect for my managers and for this company. "
    "They pushed me too far and now they will deal with the consequences.",
    "Nobody cares that I saved the project last quarter. The credit went to the favorite again. I am bitter, exhausted "
    "and finished with keeping my mouth shut about this miserable workplace.",
};

const std::vector<std::string> kJob = {
    "Senior software engineer position available. Competitive salary, remote options and generous benefits. Submit "
    "your resume and cover letter today to join a growing team of innovators.",
    "Now hiring experienced analysts. Apply online in minutes. Upload your resume, set job alerts and get matched with "
    "employers looking for candidates with your skills and salary expectations.",
    "Career opportunities in sales and account management. We offer signing bonus, relocation assistance and a clear "
    "path to promotion. Recruiters are reviewing applications this week.",
    "Find your next job. Browse thousands of openings by location, salary and industry. Create a candidate profile and "
    "let recruiters contact you about interviews.",
    "Hiring now: network administrator, full time, benefits package with retirement matching. Interview process "
    "includes a phone screen and an onsite technical assessment. Apply with resume.",
    "Resume writing tips that get interviews. Tailor your resume to each job posting, highlight achievements and "
    "prepare answers for common interview questions before meeting the hiring manager.",
    "Job fair this weekend with over fifty employers recruiting for engineering, finance and operations roles. Bring "
    "printed copies of your resume and dress for an interview.",
    "Executive search firm seeking candidates for director level positions. Confidential applications welcome. Salary "
    "negotiable based on experience. Send your resume to our recruiters.",
    "Salary comparison tool. See what employers pay for your job title and negotiate your next offer with confidence. "
    "Compare benefits, bonuses and vacation across companies hiring now.",
    "Apply today for accounting and payroll openings. Flexible schedule, tuition reimbursement and paid training. "
    "Qualified candidates will be contacted by a recruiter for an interview.",
    "Top employers are hiring remote workers. Filter jobs by contract, part time or permanent. Save searches, track "
    "applications and receive interview invitations directly.",
    "Thinking about a career change? Our placement agency matches candidates with employers offering better salary, "
    "benefits and growth. Upload a resume and start applying for jobs.",
};

const std::vector<std::string> kWikileaks = {
    "Submit documents securely and anonymously. Our leak platform protects sources through encrypted upload and never "
    "logs identities. Publish evidence of corruption, classified cables and corporate wrongdoing.",
    "Whistleblowers can upload leaked files through our anonymous drop box. Encrypted submission keeps your identity "
    "hidden. We publish confidential documents that governments and corporations want suppressed.",
    "New release: thousands of classified diplomatic cables published in full. Journalists and the public can search "
    "the leaked archive. Sources submitted the documents through our secure anonymous system.",
    "How to leak safely: use the encrypted submission page, remove metadata from documents and never reveal your "
    "identity. Our editors verify and publish leaked material exposing secrets.",
    "Corporate leaks archive. Internal memos, confidential contracts and secret emails disclosed by insiders. Submit "
    "additional evidence anonymously through the encrypted upload form.",
    "We accept classified, censored or otherwise restricted material of political, diplomatic or ethical significance. "
    "Anonymous submission protects whistleblowers. Leaked documents are published after verification.",
    "Leaked files reveal secret surveillance programs. The whistleblower who submitted the documents remains "
    "anonymous. Download the full archive or submit more evidence through the encrypted drop.",
    "Transparency through disclosure. Our anonymous dropbox lets insiders leak secret documents without being traced. "
    "Published leaks have exposed censorship, fraud and classified operations.",
    "Submission guidelines: compress leaked documents, upload through the onion encrypted service and wait for "
    "verification. We never reveal sources. Classified and confidential material welcome.",
    "Breaking: leaked internal documents expose fraud at a major defense contractor. The anonymous source submitted "
    "classified contracts and secret emails. Full publication available in our archive.",
    "Support whistleblowers who leak the truth. Donate to keep the anonymous encrypted submission system online and "
    "continue publishing censored and classified documents.",
    "Secure drop instructions for insiders: anonymous upload, encrypted transfer, metadata scrubbing. Our journalists "
    "verify leaked documents before publishing them to the archive.",
};

const std::vector<std::string> kKeylogger = {
    "Download the stealth keylogger that records every keystroke invisibly. Capture passwords, chat logs and "
    "screenshots, then receive encrypted reports by email. Undetectable by antivirus.",
    "Keystroke logger installation guide. Run the installer as administrator, enable hidden mode and configure remote "
    "delivery of captured keystrokes and passwords.",
    "Invisible monitoring software records keystrokes, clipboard contents and visited websites. The keylogger hides "
    "from the task manager and uploads logs to a remote server.",
    "Best spyware keylogger of the year. Silent install, password capture, remote viewing and automatic screenshots. "
    "Works on every Windows version without detection.",
    "Hardware and software keyloggers compared. Software keyloggers install silently, capture credentials and email "
    "logs. Hidden processes avoid antivirus detection.",
    "Free keylogger download. Record typed passwords and messages, hide the program icon, schedule log uploads over "
    "ftp and monitor any computer remotely.",
    "Remote administration trojan with integrated keylogger module. Capture keystrokes, steal saved credentials and "
    "control the infected machine silently.",
    "How to install a keylogger on a work computer without the user noticing. Disable notifications, hide the "
    "executable and forward captured keystrokes to your email.",
    "Password capture tool records logins from browsers and applications. Stealth mode keylogger with encrypted log "
    "files and remote retrieval. Undetectable installer.",
    "Employee monitoring keylogger with hidden agent. Records keystrokes, screenshots and application usage. Logs are "
    "uploaded silently to a remote dashboard.",
    "Kernel level keylogger bypasses antivirus and records every keystroke including passwords typed at login. "
    "Silent deployment executable for administrators.",
    "Keylogger setup: copy the executable, register it as a hidden service, set the capture interval and enter the "
    "remote address for keystroke log delivery.",
};

const std::vector<std::string> kBenignPages = {
    "Local weather forecast shows sunny skies this afternoon with a light breeze and mild temperatures through the "
    "weekend.",
    "The city council approved the new park renovation plan after a long public meeting on Tuesday evening.",
    "Quarterly earnings beat expectations as retail sales grew across most regions during the holiday season.",
    "Our recipe of the day is a simple vegetable soup with fresh herbs, garlic and crusty bread.",
    "The home team won the championship game in overtime after a dramatic comeback in the final minutes.",
    "Compare prices on laptops, monitors and keyboards with free shipping on orders over fifty dollars.",
    "Traffic report: delays expected on the highway due to road construction near the downtown exit.",
    "New study finds that regular walking improves sleep quality and reduces stress for office workers.",
    "Technology review of the latest smartphone praises the camera quality and battery life.",
    "Airline announces new direct flights to several European cities starting next spring.",
    "Gardening tips for early spring include pruning shrubs, preparing soil and planting hardy flowers.",
    "Stock market closes slightly higher as investors await the central bank interest rate decision.",
    "Museum opens a new exhibit featuring modern art and sculpture from regional artists.",
    "Movie reviews for the weekend releases include a family comedy and a historical drama.",
    "Software update adds new features to the spreadsheet application and fixes several bugs.",
    "Online banking portal scheduled maintenance will occur on Sunday morning between two and four.",
    "The library extends evening hours and adds a new reading program for children.",
    "Healthy lunch ideas for busy workdays include salads, wraps and homemade grain bowls.",
    "Travel guide to national parks with hiking trails, camping information and seasonal advice.",
    "The university announced a new engineering building funded by alumni donations.",
    "Product documentation for the printer driver explains installation and network configuration.",
    "Coffee shop chain introduces seasonal drinks and a loyalty rewards program.",
    "Local school board discusses budget priorities and new classroom technology.",
    "Industry conference agenda lists keynote speakers, workshops and networking sessions.",
    "Car maintenance checklist covers tire pressure, oil changes and brake inspections.",
    "Photo gallery of the annual marathon shows runners crossing the finish line downtown.",
    "Vendor portal lists open purchase orders, invoices and shipping confirmations.",
    "Standards body publishes updated guidance on spreadsheet accessibility and document formats.",
    "Community theater announces auditions for the summer musical production.",
    "Online course catalog offers classes in statistics, writing and project management.",
    "Hardware store weekly deals include paint, tools and outdoor furniture.",
    "Regional news covers the opening of a new hospital wing and expanded clinic hours.",
    "Conference call service adds support for video meetings and screen sharing.",
    "Cloud storage provider explains new sharing options for teams and departments.",
    "Sports scores roundup with highlights from basketball, hockey and soccer matches.",
    "Energy company offers tips for reducing heating costs during the winter months.",
    "Food delivery app expands service to suburban neighborhoods with lower fees.",
    "Encyclopedia article on the history of printing and the spread of books in Europe.",
    "Mapping service adds real time transit information for buses and trains.",
    "Electronics retailer announces a clearance sale on televisions and headphones.",
};

const std::vector<std::string> kBenignEmails = {
    "Hi, please find the latest status update for the project. Let me know if anything needs changing before Friday.",
    "Can we move our meeting to Thursday afternoon? I have a conflict tomorrow morning.",
    "Thanks for the quick turnaround on the report. The numbers look good to me.",
    "Reminder that the team lunch is on Wednesday at noon in the small conference room.",
    "Attached are the meeting notes and action items from this morning.",
    "Could you review the draft proposal and send comments by end of day?",
    "The client confirmed the order and asked for delivery next week.",
    "I updated the spreadsheet with the new figures from accounting.",
    "Please approve the purchase request for the replacement monitors.",
    "Quick question about the schedule for the training session next month.",
    "Server maintenance is planned for Saturday night. Expect a short outage.",
    "Great presentation today. The customer seemed very interested in the demo.",
    "Following up on our call, here is the summary of the agreed next steps.",
    "The invoice has been processed and payment should arrive within ten days.",
    "Welcome aboard! Let me know if you need help getting set up this week.",
    "Can you send me the latest version of the design document?",
    "Budget review meeting is confirmed for Monday at ten.",
    "I will be out of the office on Friday, please contact my colleague for urgent issues.",
    "The test results are in and everything passed on the first run.",
    "Please update your timesheet before the end of the week.",
    "Here is the agenda for the quarterly planning session.",
    "Our shipment was delayed by the carrier, new estimate is Tuesday.",
    "The backup job completed successfully last night.",
    "Thanks for covering the support queue while I was away.",
    "Could we schedule a short call to discuss the contract terms?",
    "The new hire orientation starts at nine in the main lobby.",
    "Updated the wiki page with installation instructions for the new tool.",
    "Sales figures for last month are attached for your review.",
    "Please remember to lock your screen when leaving your desk.",
    "Let us know your preferred dates for the team offsite.",
};

// General-language counts for the dictionary. Topic vocabulary is mostly
// absent, as it would be from a list of very common words.
const std::vector<std::pair<std::string, long>> kWordCounts = {
    {"the", 23135851162}, {"of", 13151942776}, {"and", 12997637966}, {"to", 12136980858}, {"in", 8469404971},
    {"for", 5933321709},  {"is", 4705743816},  {"on", 3750423199},  {"that", 3400031103}, {"by", 3350048871},
    {"this", 3228469771}, {"with", 3183110675}, {"you", 2996181025}, {"it", 2813163874},  {"not", 2633487141},
    {"or", 2590739907},   {"be", 2398724162},  {"are", 2393614870}, {"from", 2275595356}, {"at", 2272272772},
    {"as", 2247431740},   {"your", 2062066547}, {"all", 2022459848}, {"have", 1564202750}, {"new", 1551258643},
    {"more", 1544771673}, {"an", 1518266684},  {"was", 1483428678}, {"we", 1390661912},  {"will", 1356293641},
    {"home", 1276852170}, {"can", 1242323499}, {"us", 1229112622},  {"about", 1226734006}, {"if", 1134987907},
    {"page", 1082121730}, {"my", 1059793441},  {"has", 1046319984}, {"search", 1024093118}, {"free", 1014107316},
    {"but", 999499957},   {"our", 998757982},  {"one", 993536631},  {"other", 978481319}, {"do", 950751722},
    {"no", 937112320},    {"information", 932594387}, {"time", 908705570}, {"they", 883223816}, {"site", 844310242},
    {"he", 842847219},    {"up", 829969374},   {"may", 827822032},  {"what", 812395582}, {"which", 810514085},
    {"their", 782849411}, {"news", 755424983}, {"out", 741601852},  {"use", 719980257},  {"any", 710741293},
    {"there", 701170205}, {"see", 681410380},  {"only", 661010802}, {"so", 656870258},   {"his", 652154840},
    {"when", 650107213},  {"contact", 645885262}, {"here", 639881784}, {"business", 637134177}, {"who", 630923787},
    {"web", 619764409},   {"also", 616966747}, {"now", 611656268},  {"help", 611627766}, {"get", 605220630},
    {"view", 598464486},  {"online", 595868730}, {"first", 578161543}, {"been", 576744482}, {"would", 572644147},
    {"how", 571848080},   {"were", 570699558}, {"me", 566617666},   {"services", 562206012}, {"some", 548829289},
    {"these", 541003982}, {"click", 536746424}, {"its", 525627757}, {"like", 520585287}, {"service", 519537222},
    {"than", 502609275},  {"find", 502043695}, {"price", 501651226}, {"date", 488967374}, {"back", 488026260},
    {"top", 485200064},   {"people", 480367563}, {"had", 480021504}, {"list", 477458196}, {"name", 475421128},
    {"just", 473869255},  {"over", 462981838}, {"state", 462318215}, {"year", 460784919}, {"day", 459680999},
    {"into", 459330559},  {"email", 456721052}, {"two", 456113236}, {"health", 455728212}, {"world", 453814018},
    {"next", 448040097},  {"used", 445922380}, {"go", 441547252},   {"work", 439916522}, {"last", 439314787},
    {"most", 435465237},  {"products", 435044880}, {"music", 434761723}, {"buy", 433325116}, {"data", 432919938},
    {"make", 431596567},  {"them", 430538090}, {"should", 428945373}, {"product", 425980854}, {"system", 424657826},
    {"post", 423968575},  {"her", 423398712},  {"city", 421683809}, {"add", 417512436},  {"policy", 411839643},
    {"number", 411541434}, {"such", 409864624}, {"please", 409606698}, {"available", 409287090}, {"copyright", 409118233},
    {"support", 401940694}, {"message", 401113628}, {"after", 398755609}, {"best", 397825149}, {"software", 397347837},
    {"then", 394822701},  {"jan", 393591949},  {"good", 393003452}, {"video", 392987053}, {"well", 392211839},
    {"where", 385891224}, {"info", 384861087}, {"rights", 381743547}, {"public", 380474233}, {"books", 376720493},
    {"high", 375985394},  {"school", 375781012}, {"through", 375497155}, {"each", 371567346}, {"links", 370753419},
    {"she", 369836566},   {"review", 368930536}, {"years", 366966003}, {"order", 366488032}, {"very", 362536498},
    {"privacy", 362223244}, {"book", 362102836}, {"items", 361390437}, {"company", 360542149}, {"read", 358962002},
    {"group", 357893223}, {"need", 352818592}, {"many", 352683306}, {"user", 351896547}, {"said", 350735432},
    {"does", 350254512},  {"set", 349993853},  {"under", 349904419}, {"general", 347955131}, {"research", 347745374},
    {"university", 346873208}, {"january", 345758113}, {"mail", 344818101}, {"full", 344537713}, {"map", 343844342},
    {"reviews", 343702005}, {"program", 342922960}, {"life", 342613178}, {"know", 342394064}, {"games", 342055009},
    {"way", 339930001},   {"days", 339661069}, {"management", 339337483}, {"part", 338766393}, {"could", 337951405},
    {"great", 337669636}, {"united", 337609708}, {"hotel", 335936547}, {"real", 335769224}, {"item", 333735856},
    {"international", 333434837}, {"center", 333094279}, {"must", 330962023}, {"store", 330789213}, {"travel", 329810469},
    {"comments", 326958844}, {"made", 325987470}, {"development", 325505519}, {"report", 325302223}, {"off", 324736213},
    {"member", 324398216}, {"details", 323542434}, {"line", 323296393}, {"terms", 322858823}, {"before", 322458468},
    {"hotels", 320413279}, {"did", 320032474}, {"send", 318963838}, {"right", 317902316}, {"type", 317653614},
    {"because", 317190284}, {"local", 316848659}, {"those", 315854305}, {"using", 315545930}, {"results", 314913061},
    {"office", 314665010}, {"education", 313739289}, {"national", 313532069}, {"car", 313227098}, {"design", 311948718},
    {"take", 311670807},  {"posted", 311520706}, {"internet", 311154467}, {"address", 310783575}, {"community", 310656289},
    {"within", 310307178}, {"states", 310164108}, {"area", 308785025}, {"want", 308695785}, {"phone", 308568613},
    {"shipping", 308215436}, {"reserved", 307887473}, {"subject", 307811113}, {"between", 307661102}, {"forum", 307550225},
    {"family", 306836567}, {"long", 305946015}, {"based", 304986032}, {"code", 303969024}, {"show", 303869093},
    {"even", 303609838},  {"black", 303463766}, {"check", 303276452}, {"special", 302813467}, {"prices", 301974541},
    {"website", 300928113}, {"index", 300640149}, {"being", 300637116}, {"women", 300478612}, {"much", 300451830},
    {"sign", 300256045},  {"file", 299954683}, {"link", 298984818}, {"open", 298911590}, {"today", 298762883},
    {"technology", 298610034}, {"south", 298484081}, {"case", 297872787}, {"project", 297664964}, {"same", 297635911},
    {"pages", 294957436}, {"version", 294413009}, {"section", 293919217}, {"own", 292873262}, {"found", 292784404},
    {"sports", 292682761}, {"house", 292405356}, {"related", 292356281}, {"security", 292090651}, {"both", 289819787},
    {"county", 287983811}, {"american", 287896545}, {"photo", 287812547}, {"game", 287688908}, {"members", 287657632},
    {"power", 287375592}, {"while", 286789512}, {"care", 286681318}, {"network", 286585564}, {"down", 286381117},
    {"computer", 286179048}, {"systems", 285928837}, {"three", 285575098}, {"total", 284818059}, {"place", 284663213},
    {"end", 284451632},   {"following", 284397829}, {"download", 284265000}, {"him", 283707155}, {"without", 283467478},
    {"per", 282910210},   {"access", 282838401}, {"think", 282525010}, {"north", 282416442}, {"resources", 282249062},
    {"current", 281931102}, {"posts", 281617286}, {"big", 281503218}, {"media", 281213468}, {"law", 280739810},
    {"control", 280416413}, {"water", 279969011}, {"history", 279793566}, {"pictures", 279663316}, {"size", 279602124},
    {"art", 279556536},   {"personal", 279461318}, {"since", 279266398}, {"including", 278751802}, {"guide", 278643215},
    {"shop", 278316046},  {"directory", 278253710}, {"board", 278114342}, {"location", 277936476}, {"change", 277747026},
    {"white", 277651064}, {"text", 277611706}, {"small", 277450893}, {"rating", 277301234}, {"rate", 276991712},
    {"government", 276803318}, {"children", 276710390}, {"during", 276522839}, {"return", 275916424}, {"students", 275631401},
    {"shopping", 275524578}, {"account", 275286891}, {"times", 275043216}, {"sites", 274977310}, {"level", 274879312},
    {"digital", 274616107}, {"profile", 274373112}, {"previous", 274121121}, {"form", 273946201}, {"events", 273831712},
    {"love", 273678410},  {"old", 273512904},  {"john", 273413602}, {"main", 273101013}, {"call", 272913123},
    {"hours", 272704911}, {"image", 272601012}, {"department", 272411003}, {"title", 272203045}, {"description", 271990821},
    {"insurance", 271811903}, {"another", 271701145}, {"why", 271520132}, {"shall", 271410012}, {"property", 271310914},
    {"class", 271209123}, {"still", 271012211}, {"money", 270901231}, {"quality", 270812131}, {"every", 270611220},
    {"listing", 270401234}, {"content", 270312345}, {"country", 270210321}, {"private", 270103421}, {"little", 269990111},
    {"visit", 269889012}, {"save", 269701233}, {"tools", 269612322}, {"low", 269511121}, {"reply", 269401211},
    {"customer", 269300121}, {"december", 269201112}, {"compare", 269100211}, {"movies", 269001123}, {"include", 268901213},
    {"college", 268800121}, {"value", 268701212}, {"article", 268600112}, {"york", 268501123}, {"man", 268400211},
    {"card", 268301211},  {"jobs", 268200123}, {"provide", 268100211}, {"food", 268001123}, {"source", 267901212},
    {"author", 267800123}, {"different", 267701211}, {"press", 267600212}, {"learn", 267501121}, {"sale", 267400112},
    {"around", 267301211}, {"print", 267200123}, {"course", 267101211}, {"job", 267000112}, {"canada", 266901212},
    {"process", 266800121}, {"teen", 266701212}, {"room", 266600112}, {"stock", 266501121}, {"training", 266400211},
    {"too", 266301112},   {"credit", 266200121}, {"point", 266101212}, {"meeting", 120001123}, {"team", 150001212},
    {"weekend", 90001123}, {"lunch", 60001212}, {"schedule", 110001123}, {"budget", 95001212}, {"client", 85001123},
    {"weather", 130001212}, {"park", 120001121}, {"recipe", 50001212}, {"soup", 30001123}, {"championship", 35001212},
    {"laptops", 20001121}, {"traffic", 90001212}, {"walking", 40001123}, {"smartphone", 30001212}, {"flights", 45001121},
    {"gardening", 20001212}, {"museum", 50001123}, {"spreadsheet", 15001212}, {"banking", 45001121}, {"library", 110001212},
    {"conference", 90001123}, {"invoice", 25001212}, {"salary", 60001121}, {"resume", 40001212}, {"interview", 55001123},
    {"password", 70001212}, {"documents", 130001121}, {"secret", 40001212}, {"employees", 60001121},
};

}  // namespace

const std::vector<std::string>& topic_documents(conical::Topic t) {
  switch (t) {
    case conical::Topic::Disgruntled: return kDisgruntled;
    case conical::Topic::JobSite: return kJob;
    case conical::Topic::Wikileaks: return kWikileaks;
    case conical::Topic::Keylogger: return kKeylogger;
  }
  return kDisgruntled;
}

const std::vector<std::string>& benign_pages() { return kBenignPages; }
const std::vector<std::string>& benign_emails() { return kBenignEmails; }
const std::vector<std::pair<std::string, long>>& word_counts() { return kWordCounts; }

}  // namespace chromabehave::synth::text
